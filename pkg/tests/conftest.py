"""Shared fixtures; synthetic builders live in rvhate.synthetic."""

import json

import pytest

from rvhate.synthetic import (  # noqa: F401 (re-exported for test modules)
    oracle_panel_pair,
    planted_oracle_panel,
    separable_embeddings,
    toy_corpus_rows,
)

synthetic_corpus_rows = toy_corpus_rows


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path


@pytest.fixture
def corpus_path(tmp_path):
    return write_jsonl(tmp_path / "tiny.jsonl", toy_corpus_rows())
