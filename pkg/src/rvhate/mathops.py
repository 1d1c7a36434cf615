"""Vector primitives and statistics shared by every other module.

All functions are pure: they validate their inputs, never mutate them, and
are safe to call from any number of concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput, ZeroNormVector

QUANTILE_METHODS = ("linear-interpolation",)


@dataclass(frozen=True)
class QuantileSpec:
    """A quantile request: probability level plus interpolation method.

    Only linear interpolation over order statistics is supported
    (index h = (n-1)*p), which keeps downstream outlier thresholds
    reproducible across platforms.
    """

    p: float
    method: str = "linear-interpolation"

    def __post_init__(self):
        if self.method not in QUANTILE_METHODS:
            raise ValueError(f"unknown quantile method {self.method!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"quantile level must be in [0, 1], got {self.p}")


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a finite, nonempty 1-D float64 array or raise ValueError."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, in [-1, 1].

    Raises
    ------
    DimensionMismatch
        If the vectors differ in dimension.
    ZeroNormVector
        If either vector has zero norm. Zero embeddings indicate an
        upstream featurization failure and must surface, so this is not
        silently defined as 0.
    """
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.shape[0] != bv.shape[0]:
        raise DimensionMismatch(f"dim {av.shape[0]} vs {bv.shape[0]}")
    na = np.linalg.norm(av)
    nb = np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormVector("cosine similarity undefined for a zero-norm vector")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


def euclidean_distance(a, b) -> float:
    """L2 distance between two vectors of equal dimension."""
    av = as_vector(a, "a")
    bv = as_vector(b, "b")
    if av.shape[0] != bv.shape[0]:
        raise DimensionMismatch(f"dim {av.shape[0]} vs {bv.shape[0]}")
    return float(np.linalg.norm(av - bv))


def quantile(xs, spec: QuantileSpec) -> float:
    """Linear-interpolation quantile over order statistics.

    Sorts ``xs`` ascending and evaluates index h = (n-1)*p as
    ``xs[floor(h)] + (h - floor(h)) * (xs[floor(h)+1] - xs[floor(h)])``.
    Implemented directly from that formula (not np.quantile, whose
    internal lerp differs in the last ulp for h-fractions >= 0.5) so that
    independent re-derivations agree bit-for-bit.
    """
    x = np.sort(np.asarray(xs, dtype=np.float64))
    n = x.shape[0]
    if n == 0:
        raise EmptyInput("quantile of empty data")
    h = (n - 1) * spec.p
    lo = int(np.floor(h))
    frac = h - lo
    if frac == 0.0 or lo + 1 >= n:
        return float(x[lo])
    return float(x[lo] + frac * (x[lo + 1] - x[lo]))


def softmax(x) -> np.ndarray:
    """Numerically stable softmax of a 1-D array."""
    v = as_vector(x, "x")
    shifted = v - v.max()
    e = np.exp(shifted)
    return e / e.sum()


def log_sum_exp(x) -> float:
    """Stable log(sum(exp(x))) of a 1-D array."""
    v = as_vector(x, "x")
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def l2_normalize_rows(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-normalize a matrix; zero rows stay zero.

    Returns (normalized matrix, boolean mask of zero rows).
    """
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    zero = norms[:, 0] == 0.0
    safe = np.where(norms == 0.0, 1.0, norms)
    return m / safe, zero
