"""Batch-encode a dataset and write the RVHE binary embedding format.

RVHE v1 layout (little-endian): magic b"RVHE", u32 version=1, u32 count,
u32 dim, then count*dim float32 row-major. Rows align by index with the
dataset file's lines; every non-zero row is L2-normalized. The file is
written to a temporary sibling and renamed into place, so readers never
observe a partial file.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .dataset import read_jsonl
from .encoders import get_encoder

MAGIC = b"RVHE"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class ExportError(RuntimeError):
    """Raised when a batch fails to encode; carries the batch index."""

    def __init__(self, batch_index: int, cause: BaseException):
        self.batch_index = batch_index
        super().__init__(f"batch {batch_index} failed: {cause}")


@dataclass(frozen=True)
class ExportJob:
    dataset: str
    encoder: str
    out: str
    batch_size: int = 64

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch size must be positive, got {self.batch_size}")


def export_embeddings(job: ExportJob, encoder=None) -> tuple[int, int]:
    """Encode every dataset line in order and write the RVHE file.

    Returns (row count, dimension). An injected ``encoder`` overrides the
    id lookup (used by tests).
    """
    lines = read_jsonl(job.dataset)
    enc = encoder if encoder is not None else get_encoder(job.encoder)
    texts = [line.text for line in lines]

    blocks: list[np.ndarray] = []
    for batch_index, start in enumerate(range(0, len(texts), job.batch_size)):
        chunk = texts[start : start + job.batch_size]
        try:
            encoded = np.asarray(enc.encode(chunk), dtype=np.float64)
        except Exception as exc:
            raise ExportError(batch_index, exc) from exc
        if encoded.shape != (len(chunk), enc.dim):
            raise ExportError(
                batch_index,
                ValueError(f"encoder returned shape {encoded.shape}, expected ({len(chunk)}, {enc.dim})"),
            )
        blocks.append(encoded)

    if blocks:
        vectors = np.vstack(blocks)
    else:
        vectors = np.zeros((0, enc.dim), dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    vectors = vectors / np.where(norms == 0.0, 1.0, norms)
    payload = np.ascontiguousarray(vectors, dtype="<f4")

    out_dir = os.path.dirname(os.path.abspath(job.out)) or "."
    fd, tmp_path = tempfile.mkstemp(prefix=".rvhe-", dir=out_dir)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, payload.shape[0], payload.shape[1]))
            fh.write(payload.tobytes(order="C"))
        os.replace(tmp_path, job.out)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return payload.shape[0], payload.shape[1]
