"""Small deterministic k-means (k-means++ seeding, Lloyd iterations).

Kept in-tree so clustering results are reproducible from a seed alone,
with no dependence on external library version details.
"""

from __future__ import annotations

import numpy as np


def kmeans(
    points: np.ndarray, k: int, seed: int = 0, max_iters: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Cluster points (m, f) into k groups.

    Returns (labels (m,), centers (k, f)).  Empty clusters are reseeded to
    the point currently farthest from its assigned center.
    """
    points = np.asarray(points, dtype=float)
    m = len(points)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > m:
        raise ValueError(f"k={k} exceeds number of points {m}")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(m)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            centers[i] = points[rng.choice(m, p=d2 / total)]
        else:
            centers[i] = points[rng.integers(m)]
        d2 = np.minimum(d2, ((points - centers[i]) ** 2).sum(axis=1))

    labels = np.full(m, -1)
    for _ in range(max_iters):
        dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for i in range(k):
            mask = labels == i
            if mask.any():
                centers[i] = points[mask].mean(axis=0)
            else:
                far = dists[np.arange(m), labels].argmax()
                centers[i] = points[far]
                labels[far] = i
    return labels, centers
