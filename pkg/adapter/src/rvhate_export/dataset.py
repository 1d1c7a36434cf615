"""Minimal JSONL dataset reading.

The exporter talks to the detection pipeline only through file formats, so
this is a standalone reader for the shared dataset schema: one JSON object
per line with keys id, text, label (0|1), split (train|valid|test).
"""

from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class DatasetLine:
    id: str
    text: str
    label: int
    split: str


def read_jsonl(path) -> list[DatasetLine]:
    """Parse the dataset preserving line order; blank lines are skipped."""
    lines: list[DatasetLine] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                lines.append(
                    DatasetLine(
                        id=str(obj["id"]),
                        text=str(obj["text"]),
                        label=int(obj["label"]),
                        split=str(obj["split"]),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing key {exc}") from exc
    return lines
