"""Deterministic target-entity tagging and train-set augmentation.

A gazetteer maps lowercase surface terms (single tokens or multi-token
phrases) to one of three categories: ORG, NORP, GPE. Tagging scans the
whitespace-delimited tokens of a text left to right, tries the longest
gazetteer phrase first at each position, and prefixes every non-overlapping
match with the marker ``[TARGET] ``. Matching is case-insensitive and
ignores leading/trailing punctuation on tokens; the original text,
including its whitespace and punctuation, is preserved around the inserted
markers. Tokens that are themselves the marker, or that directly follow
one, are never re-tagged, so tagging is idempotent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .data import Dataset, LabeledExample

CATEGORIES = ("ORG", "NORP", "GPE")
MARKER = "[TARGET]"

_EDGE_PUNCT = re.compile(r"^[\W_]+|[\W_]+$", re.UNICODE)
_WHITESPACE = re.compile(r"(\s+)")


def _normalize_token(token: str) -> str:
    return _EDGE_PUNCT.sub("", token.lower())


class Gazetteer:
    """Immutable term -> category lexicon."""

    def __init__(self, entries: dict[str, str]):
        cleaned: dict[str, str] = {}
        max_len = 1
        for term, category in entries.items():
            term = " ".join(term.lower().split())
            if not term:
                raise ValueError("gazetteer terms must be nonempty")
            if category not in CATEGORIES:
                raise ValueError(f"category must be one of {CATEGORIES}, got {category!r}")
            cleaned[term] = category
            max_len = max(max_len, term.count(" ") + 1)
        self._entries = cleaned
        self.max_phrase_len = max_len

    @classmethod
    def load(cls, path) -> "Gazetteer":
        """Read a ``term<TAB>category`` file; '#' starts a comment line."""
        entries: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'term<TAB>category'")
                term, category = line.split("\t", 1)
                entries[term.strip()] = category.strip()
        return cls(entries)

    def category(self, term: str) -> str | None:
        return self._entries.get(term)

    def __contains__(self, term: str) -> bool:
        return term in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def default_gazetteer() -> Gazetteer:
    """The starter NORP/GPE/ORG list shipped with the package."""
    text = resources.files("rvhate").joinpath("resources/gazetteer_default.txt").read_text("utf-8")
    entries: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, category = line.split("\t", 1)
        entries[term.strip()] = category.strip()
    return Gazetteer(entries)


@dataclass(frozen=True)
class TaggedExample:
    base: LabeledExample
    tagged_text: str
    hit_count: int


def tag_targets(example: LabeledExample, gazetteer: Gazetteer) -> TaggedExample:
    """Insert ``[TARGET]`` markers before gazetteer matches in one example."""
    parts = _WHITESPACE.split(example.text)
    # even indices are tokens (possibly ''), odd indices the whitespace between them
    token_slots = [i for i in range(0, len(parts), 2) if parts[i]]
    n = len(token_slots)
    insert_before: list[int] = []
    pos = 0
    while pos < n:
        raw = parts[token_slots[pos]]
        if raw == MARKER:
            pos += 1
            continue
        if pos > 0 and parts[token_slots[pos - 1]] == MARKER:
            pos += 1
            continue
        matched = 0
        limit = min(gazetteer.max_phrase_len, n - pos)
        for length in range(limit, 0, -1):
            words = [_normalize_token(parts[token_slots[pos + j]]) for j in range(length)]
            if any(w == "" for w in words):
                continue
            if " ".join(words) in gazetteer:
                matched = length
                break
        if matched:
            insert_before.append(token_slots[pos])
            pos += matched
        else:
            pos += 1

    if not insert_before:
        tagged = example.text
    else:
        pieces = []
        marks = set(insert_before)
        for idx, part in enumerate(parts):
            if idx in marks:
                pieces.append(MARKER + " ")
            pieces.append(part)
        tagged = "".join(pieces)
    return TaggedExample(base=example, tagged_text=tagged, hit_count=tagged.count(MARKER))


def augment_train_set(dataset: Dataset, gazetteer: Gazetteer) -> Dataset:
    """Append tagged copies of taggable hate-labeled train examples.

    Originals are never modified or removed; valid/test splits pass through
    untouched. Appended copies take the id suffix ``#tagged``. Only
    label==1 examples produce copies.
    """
    examples = list(dataset.examples)
    for ex in dataset.examples:
        if ex.split != "train" or ex.label != 1:
            continue
        tagged = tag_targets(ex, gazetteer)
        if tagged.hit_count >= 1:
            examples.append(
                LabeledExample(id=ex.id + "#tagged", text=tagged.tagged_text, label=1, split="train")
            )
    return Dataset(name=dataset.name, examples=examples)


def tagging_coverage(dataset: Dataset, gazetteer: Gazetteer) -> float:
    """Fraction of hate-labeled train examples with at least one marker hit."""
    hate = [ex for ex in dataset.examples if ex.split == "train" and ex.label == 1]
    if not hate:
        return 0.0
    hits = sum(1 for ex in hate if tag_targets(ex, gazetteer).hit_count >= 1)
    return hits / len(hate)
