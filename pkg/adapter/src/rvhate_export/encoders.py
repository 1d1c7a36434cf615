"""Sentence encoders behind a single string identifier.

Two families:

    hash:<dim>   deterministic offline encoder: each token hashes to a
                 fixed random Gaussian direction, texts are summed token
                 vectors. No downloads, stable across runs; useful for
                 tests, smoke runs, and air-gapped machines.
    <model-id>   anything else is treated as a sentence-transformers model
                 name and loaded lazily (requires the 'encoders' extra and
                 model availability).

Every encoder maps a list of texts to a (n, dim) float array; rows are
L2-normalized downstream.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


class HashEncoder:
    """Deterministic bag-of-token random-feature encoder."""

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError(f"hash encoder dim must be >= 2, got {dim}")
        self.dim = dim
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            seed = _fnv1a64(token.encode("utf-8"))
            vec = np.random.default_rng(seed).standard_normal(self.dim)
            self._token_cache[token] = vec
        return vec

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for token in text.lower().split():
                out[i] += self._token_vector(token)
        return out


class SentenceTransformerEncoder:
    """Thin wrapper over a pretrained sentence-transformers model."""

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise RuntimeError(
                "sentence-transformers is not installed; use an encoder id like "
                "'hash:512' or install the 'encoders' extra"
            ) from exc
        self._model = SentenceTransformer(model_id)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(texts, convert_to_numpy=True, normalize_embeddings=False),
            dtype=np.float64,
        )


def get_encoder(identifier: str):
    if identifier.startswith("hash:"):
        return HashEncoder(int(identifier.split(":", 1)[1]))
    return SentenceTransformerEncoder(identifier)
