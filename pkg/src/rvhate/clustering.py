"""Per-class k-means, anchor selection, and IQR outlier removal.

Clustering always runs Lloyd's algorithm with squared-Euclidean assignment
(k-means++ seeding); under the cosine metric the input rows are unit
vectors, which preserves Lloyd's monotone-convergence guarantee while
keeping assignment order equivalent to cosine on the sphere. The chosen
metric then governs anchor selection and outlier distances:

    cosine  anchor = argmax cos(member, centroid), distance = 1 - cos
    l2      anchor = argmin ||member - centroid||,  distance = ||member - centroid||

Outliers are members whose distance to the centroid reaches
Q3 + 1.5 * IQR; survivors must satisfy the strict inequality
``distance < upper_bound``. If that would empty a cluster (e.g. all
distances equal, IQR = 0) nothing is removed and the cluster is flagged
degenerate. After removal the centroid is recomputed from survivors
(re-normalized under cosine) and the anchor is re-selected against the new
centroid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCluster, KTooLarge
from .mathops import QuantileSpec, l2_normalize_rows, quantile

IQR_FACTOR = 1.5
METRICS = ("cosine", "l2")


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    n_iter: int
    inertia: float
    inertia_history: list[float] = field(default_factory=list)


def _sq_dists(rows: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        (rows * rows).sum(axis=1)[:, None]
        - 2.0 * rows @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeans_pp_init(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centroids = np.empty((k, rows.shape[1]), dtype=np.float64)
    chosen: list[int] = [int(rng.integers(n))]
    centroids[0] = rows[chosen[0]]
    d2 = ((rows - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # remaining points coincide with chosen centers; take the lowest
            # unused index to stay deterministic
            used = set(chosen)
            idx = next(i for i in range(n) if i not in used)
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        centroids[j] = rows[idx]
        d2 = np.minimum(d2, ((rows - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(rows, k: int, seed, max_iter: int = 100) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Stops when the assignment is unchanged between consecutive rounds or
    after ``max_iter`` rounds. Deterministic given (rows, k, seed); seeds
    may be ints or int sequences (numpy SeedSequence entropy).
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError(f"rows must be a nonempty 2-D array, got shape {rows.shape}")
    n = rows.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} available rows")

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(rows, k, rng)
    prev = None
    history: list[float] = []
    assignment = np.zeros(n, dtype=np.int64)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(rows, centroids)
        assignment = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), assignment].sum()))
        if prev is not None and np.array_equal(assignment, prev):
            break
        counts = np.bincount(assignment, minlength=k)
        new_centroids = np.zeros_like(centroids)
        np.add.at(new_centroids, assignment, rows)
        nonempty = counts > 0
        new_centroids[nonempty] /= counts[nonempty, None]
        point_costs = d2[np.arange(n), assignment].copy()
        for j in np.flatnonzero(~nonempty):
            # reseed an empty cluster at the point farthest from its current
            # centroid; ties break toward the lowest index
            far = int(point_costs.argmax())
            new_centroids[j] = rows[far]
            point_costs[far] = -1.0
        centroids = new_centroids
        prev = assignment
    else:
        # iteration budget exhausted: make the returned pair self-consistent
        d2 = _sq_dists(rows, centroids)
        assignment = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), assignment].sum()))
    return KMeansResult(
        centroids=centroids,
        assignment=assignment,
        n_iter=n_iter,
        inertia=history[-1],
        inertia_history=history,
    )


def _member_distances(members: np.ndarray, centroid: np.ndarray, metric: str) -> np.ndarray:
    if metric == "l2":
        return np.linalg.norm(members - centroid, axis=1)
    cnorm = np.linalg.norm(centroid)
    mnorms = np.linalg.norm(members, axis=1)
    sims = np.full(members.shape[0], -1.0)
    ok = (mnorms > 0.0) & (cnorm > 0.0)
    if cnorm > 0.0:
        sims[ok] = np.clip(members[ok] @ centroid / (mnorms[ok] * cnorm), -1.0, 1.0)
    # zero-norm members (or a zero centroid) read as maximally distant
    return 1.0 - sims


def select_anchor(member_indices, members, centroid, metric: str = "cosine") -> int:
    """Pick the cluster member closest to the centroid under ``metric``.

    Returns the element of ``member_indices`` whose row wins; ties break
    toward the lowest index (argmin/argmax take the first occurrence).
    """
    _check_metric(metric)
    member_indices = np.asarray(member_indices, dtype=np.int64)
    members = np.asarray(members, dtype=np.float64)
    if member_indices.size == 0:
        raise EmptyCluster("cannot select an anchor from an empty cluster")
    dists = _member_distances(members, np.asarray(centroid, dtype=np.float64), metric)
    return int(member_indices[dists.argmin()])


def iqr_keep_mask(distances) -> tuple[np.ndarray, float, bool]:
    """Strict-keep IQR mask over a 1-D distance list.

    Returns (keep mask, upper bound, degenerate flag). Members are kept iff
    ``distance < Q3 + 1.5 * (Q3 - Q1)``; when that keeps nothing the mask
    reverts to all-True and the degenerate flag is set.
    """
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise EmptyCluster("IQR filter needs at least one distance")
    q1 = quantile(d, QuantileSpec(p=0.25))
    q3 = quantile(d, QuantileSpec(p=0.75))
    upper = q3 + IQR_FACTOR * (q3 - q1)
    keep = d < upper
    degenerate = not keep.any()
    if degenerate:
        keep = np.ones_like(keep)
    return keep, upper, degenerate


@dataclass
class IqrResult:
    kept: np.ndarray
    removed: np.ndarray
    centroid: np.ndarray
    upper_bound: float
    degenerate: bool


def iqr_filter(member_indices, members, centroid, metric: str = "cosine") -> IqrResult:
    """Drop outlying members and recompute the centroid from the survivors."""
    _check_metric(metric)
    member_indices = np.asarray(member_indices, dtype=np.int64)
    members = np.asarray(members, dtype=np.float64)
    if member_indices.size == 0:
        raise EmptyCluster("IQR filter on an empty cluster")
    dists = _member_distances(members, np.asarray(centroid, dtype=np.float64), metric)
    keep, upper, degenerate = iqr_keep_mask(dists)
    survivors = members[keep]
    new_centroid = survivors.mean(axis=0)
    if metric == "cosine":
        norm = np.linalg.norm(new_centroid)
        if norm > 0.0:
            new_centroid = new_centroid / norm
    return IqrResult(
        kept=member_indices[keep],
        removed=member_indices[~keep],
        centroid=new_centroid,
        upper_bound=upper,
        degenerate=degenerate,
    )


@dataclass
class ClusterModel:
    """Per-class clustering with anchors and outlier flags.

    Cluster ids are global across classes; ``cluster_labels[c]`` gives the
    class every member of cluster ``c`` shares. ``assignment`` and
    ``outlier_flags`` are indexed by the row order of the matrix the model
    was built from; ``anchors[c]`` is a row index into that same matrix.
    """

    metric: str
    k_per_class: int
    centroids: np.ndarray
    cluster_labels: np.ndarray
    assignment: np.ndarray
    anchors: np.ndarray
    outlier_flags: np.ndarray
    degenerate_clusters: np.ndarray
    removed_counts: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.centroids.shape[0])


def build_cluster_model(
    rows,
    labels,
    k_per_class: int,
    metric: str = "cosine",
    seed=0,
    remove_outliers: bool = False,
) -> ClusterModel:
    """Cluster each class separately, then select one anchor per cluster.

    With ``remove_outliers`` the IQR filter runs once per cluster before
    anchor selection and the centroid is recomputed from the survivors, so
    anchors always follow the post-removal center.
    """
    _check_metric(metric)
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if rows.shape[0] != labels.shape[0]:
        raise ValueError("rows and labels disagree on length")
    if metric == "cosine":
        rows, _ = l2_normalize_rows(rows)

    n = rows.shape[0]
    classes = sorted(int(c) for c in np.unique(labels))
    n_clusters = k_per_class * len(classes)
    dim = rows.shape[1]

    centroids = np.zeros((n_clusters, dim), dtype=np.float64)
    cluster_labels = np.zeros(n_clusters, dtype=np.int64)
    assignment = np.full(n, -1, dtype=np.int64)
    anchors = np.full(n_clusters, -1, dtype=np.int64)
    outlier_flags = np.zeros(n, dtype=bool)
    degenerate = np.zeros(n_clusters, dtype=bool)
    removed_counts = np.zeros(n_clusters, dtype=np.int64)

    for class_pos, cls in enumerate(classes):
        class_idx = np.flatnonzero(labels == cls)
        if k_per_class > class_idx.size:
            raise KTooLarge(
                f"k_per_class={k_per_class} exceeds the {class_idx.size} rows of class {cls}"
            )
        result = kmeans(rows[class_idx], k_per_class, seed=_seed_entropy(seed) + [cls])
        offset = class_pos * k_per_class
        assignment[class_idx] = result.assignment + offset
        for local in range(k_per_class):
            cid = offset + local
            cluster_labels[cid] = cls
            member_idx = class_idx[result.assignment == local]
            centroid = result.centroids[local]
            if metric == "cosine":
                cnorm = np.linalg.norm(centroid)
                if cnorm > 0.0:
                    centroid = centroid / cnorm
            if member_idx.size == 0:
                # k-means++ on distinct rows never leaves a cluster empty,
                # but guard against pathological duplicate-row inputs
                degenerate[cid] = True
                centroids[cid] = centroid
                continue
            if remove_outliers:
                filtered = iqr_filter(member_idx, rows[member_idx], centroid, metric)
                outlier_flags[filtered.removed] = True
                removed_counts[cid] = filtered.removed.size
                degenerate[cid] |= filtered.degenerate
                centroid = filtered.centroid
                kept_idx = filtered.kept
            else:
                kept_idx = member_idx
            centroids[cid] = centroid
            anchors[cid] = select_anchor(kept_idx, rows[kept_idx], centroid, metric)

    return ClusterModel(
        metric=metric,
        k_per_class=k_per_class,
        centroids=centroids,
        cluster_labels=cluster_labels,
        assignment=assignment,
        anchors=anchors,
        outlier_flags=outlier_flags,
        degenerate_clusters=degenerate,
        removed_counts=removed_counts,
    )


def _seed_entropy(seed) -> list[int]:
    if isinstance(seed, (list, tuple)):
        return [int(s) for s in seed]
    return [int(seed)]


def write_cluster_report(model: ClusterModel, path, ids: list[str] | None = None) -> None:
    """CSV report: cluster_id, label, size, anchor_id, removed_count."""
    sizes = np.bincount(model.assignment[model.assignment >= 0], minlength=model.n_clusters)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("cluster_id,label,size,anchor_id,removed_count\n")
        for cid in range(model.n_clusters):
            anchor = int(model.anchors[cid])
            anchor_id = "" if anchor < 0 else (ids[anchor] if ids is not None else str(anchor))
            fh.write(
                f"{cid},{int(model.cluster_labels[cid])},{int(sizes[cid])},"
                f"{anchor_id},{int(model.removed_counts[cid])}\n"
            )
