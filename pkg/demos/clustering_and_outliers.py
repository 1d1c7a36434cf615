"""Per-class clustering, anchor selection, and IQR outlier removal.

Builds two noisy clusters per class on the unit sphere, plants a few
far-away "broken" points, and walks through what the outlier filter
removes and how the anchors move once the centroids are recomputed.
"""

import numpy as np

from rvhate import build_cluster_model

rng = np.random.default_rng(7)
dim = 8

def sphere_blob(direction, n, spread):
    center = np.zeros(dim)
    center[direction] = 1.0
    points = center + rng.normal(0, spread, size=(n, dim))
    return points / np.linalg.norm(points, axis=1, keepdims=True)

# class 0: two tight blobs; class 1: two looser blobs
rows = np.vstack(
    [
        sphere_blob(0, 30, 0.10),
        sphere_blob(1, 30, 0.10),
        sphere_blob(2, 30, 0.25),
        sphere_blob(3, 30, 0.25),
    ]
)
labels = np.array([0] * 60 + [1] * 60)

# plant broken points: random directions, assigned to class 1
broken = rng.normal(size=(4, dim))
broken /= np.linalg.norm(broken, axis=1, keepdims=True)
rows = np.vstack([rows, broken])
labels = np.concatenate([labels, [1, 1, 1, 1]])

plain = build_cluster_model(rows, labels, k_per_class=2, metric="cosine", seed=3)
filtered = build_cluster_model(
    rows, labels, k_per_class=2, metric="cosine", seed=3, remove_outliers=True
)

print(f"{rows.shape[0]} points, 2 clusters per class, cosine metric\n")
print("without outlier removal:")
for cid in range(plain.n_clusters):
    size = int((plain.assignment == cid).sum())
    print(f"  cluster {cid} (label {plain.cluster_labels[cid]}): size {size:3d}, "
          f"anchor index {plain.anchors[cid]}")

removed = np.flatnonzero(filtered.outlier_flags)
print("\nwith IQR removal (upper bound Q3 + 1.5*IQR on distance to centroid):")
for cid in range(filtered.n_clusters):
    size = int((filtered.assignment == cid).sum())
    print(f"  cluster {cid} (label {filtered.cluster_labels[cid]}): size {size:3d}, "
          f"removed {filtered.removed_counts[cid]}, anchor index {filtered.anchors[cid]}")
print(f"\nflagged outlier rows: {removed.tolist()}")
print("planted broken rows were:", list(range(120, 124)))
moved = sum(
    1 for a, b in zip(plain.anchors, filtered.anchors) if a != b
)
print(f"anchors that moved after centroid recomputation: {moved} of {filtered.n_clusters}")
