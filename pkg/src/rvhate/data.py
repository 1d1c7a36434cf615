"""Dataset ingestion, the hashing featurizer, and the binary embedding format.

Dataset files are JSON Lines: one object per line with keys
``id``, ``text``, ``label`` (0 = non-hate, 1 = hate) and ``split``
(train / valid / test). Line order is preserved; embedding row k always
corresponds to ``examples[k]``.

Embedding files (extension ``.rvhe``) are little-endian binary:

    magic   b"RVHE"
    u32     version (currently 1)
    u32     row count
    u32     dimension
    f32[count * dim]  row-major payload

Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagic,
    DuplicateId,
    InvalidLabel,
    ParseError,
    TruncatedFile,
    VersionMismatch,
)

SPLITS = ("train", "valid", "test")

EMBEDDING_MAGIC = b"RVHE"
EMBEDDING_VERSION = 1
_HEADER = struct.Struct("<4sIII")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LabeledExample:
    """One text with its binary label and split assignment."""

    id: str
    text: str
    label: int
    split: str


@dataclass
class Dataset:
    name: str
    examples: list[LabeledExample]

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def split_indices(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return np.array(
            [i for i, ex in enumerate(self.examples) if ex.split == split],
            dtype=np.int64,
        )

    def split_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in SPLITS}
        for ex in self.examples:
            counts[ex.split] += 1
        return counts


@dataclass(frozen=True)
class FeaturizerConfig:
    """Signed feature hashing of word and character n-grams.

    Either n-gram family may be disabled by passing None; at least one must
    stay enabled. ``hash_seed`` is folded into the hash state so different
    seeds yield different (but individually deterministic) feature spaces.
    """

    dim: int = 512
    word_ngrams: tuple[int, int] | None = (1, 2)
    char_ngrams: tuple[int, int] | None = (3, 5)
    hash_seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dim must be >= 2, got {self.dim}")
        for name, rng in (("word_ngrams", self.word_ngrams), ("char_ngrams", self.char_ngrams)):
            if rng is None:
                continue
            lo, hi = rng
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} range {rng} is empty or invalid")
        if self.word_ngrams is None and self.char_ngrams is None:
            raise ValueError("at least one n-gram family must be enabled")


@dataclass
class EmbeddingMatrix:
    """Row-aligned fixed-dimension embeddings for a dataset.

    Every non-zero row has unit L2 norm. ``zero_rows`` flags rows that came
    out empty (degenerate input text); they are tolerated rather than
    rejected because crawled corpora contain broken lines.
    """

    vectors: np.ndarray
    zero_rows: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float32)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"vectors must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vectors contain NaN or Inf")
        self.vectors = v
        if self.zero_rows is None:
            self.zero_rows = np.linalg.norm(v, axis=1) == 0.0
        else:
            self.zero_rows = np.asarray(self.zero_rows, dtype=bool)
            if self.zero_rows.shape != (v.shape[0],):
                raise ValueError("zero_rows mask does not match row count")

    @property
    def count(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def load_dataset(path, name: str | None = None) -> Dataset:
    """Parse a JSONL dataset file, preserving line order.

    Raises ParseError (with line number), InvalidLabel, or DuplicateId.
    Blank lines are tolerated.
    """
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno)
            missing = [k for k in ("id", "text", "label", "split") if k not in obj]
            if missing:
                raise ParseError(f"missing keys {missing}", line=lineno)
            ex_id = obj["id"]
            if not isinstance(ex_id, str) or not ex_id:
                raise ParseError("id must be a nonempty string", line=lineno)
            if ex_id in seen:
                raise DuplicateId(f"line {lineno}: duplicate id {ex_id!r}")
            label = obj["label"]
            if label not in (0, 1) or isinstance(label, bool):
                raise InvalidLabel(f"label must be 0 or 1, got {label!r}", line=lineno)
            split = obj["split"]
            if split not in SPLITS:
                raise ParseError(f"split must be one of {SPLITS}, got {split!r}", line=lineno)
            text = obj["text"]
            if not isinstance(text, str):
                raise ParseError("text must be a string", line=lineno)
            seen.add(ex_id)
            examples.append(LabeledExample(id=ex_id, text=text, label=int(label), split=split))
    if name is None:
        name = os.path.splitext(os.path.basename(str(path)))[0]
    return Dataset(name=name, examples=examples)


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset back out as JSONL (one object per line, input order)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in dataset.examples:
            fh.write(
                json.dumps(
                    {"id": ex.id, "text": ex.text, "label": ex.label, "split": ex.split},
                    ensure_ascii=False,
                )
                + "\n"
            )


def _fnv1a64(data: bytes, seed: int) -> int:
    h = _FNV_OFFSET ^ (seed & _MASK64)
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _ngram_features(text: str, cfg: FeaturizerConfig):
    lowered = text.lower()
    tokens = lowered.split()
    if cfg.word_ngrams is not None:
        lo, hi = cfg.word_ngrams
        for n in range(lo, hi + 1):
            for i in range(len(tokens) - n + 1):
                yield "w:" + " ".join(tokens[i : i + n])
    if cfg.char_ngrams is not None:
        # char n-grams run over whitespace-collapsed text so spacing noise
        # does not change the feature set
        base = " ".join(tokens)
        lo, hi = cfg.char_ngrams
        for n in range(lo, hi + 1):
            for i in range(len(base) - n + 1):
                yield "c:" + base[i : i + n]


def featurize_text(text: str, cfg: FeaturizerConfig) -> np.ndarray:
    """Hash one text into a unit-norm float32 row (zero row for empty text)."""
    row = np.zeros(cfg.dim, dtype=np.float64)
    for feat in _ngram_features(text, cfg):
        h = _fnv1a64(feat.encode("utf-8"), cfg.hash_seed)
        bucket = h % cfg.dim
        row[bucket] += -1.0 if (h >> 63) & 1 else 1.0
    norm = np.linalg.norm(row)
    if norm > 0.0:
        row /= norm
    return row.astype(np.float32)


def featurize(dataset: Dataset, cfg: FeaturizerConfig) -> EmbeddingMatrix:
    """Embed every example of a dataset. Pure function of (text, cfg) per row."""
    rows = np.empty((len(dataset.examples), cfg.dim), dtype=np.float32)
    for i, ex in enumerate(dataset.examples):
        rows[i] = featurize_text(ex.text, cfg)
    return EmbeddingMatrix(vectors=rows)


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    payload = np.ascontiguousarray(matrix.vectors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, matrix.count, matrix.dim))
        fh.write(payload.tobytes(order="C"))


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFile(f"{path}: file shorter than header")
        magic, version, count, dim = _HEADER.unpack(header)
        if magic != EMBEDDING_MAGIC:
            raise BadMagic(f"{path}: expected magic {EMBEDDING_MAGIC!r}, got {magic!r}")
        if version != EMBEDDING_VERSION:
            raise VersionMismatch(f"{path}: unsupported embedding format version {version}")
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) != expected:
        raise TruncatedFile(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
    return EmbeddingMatrix(vectors=vectors)
