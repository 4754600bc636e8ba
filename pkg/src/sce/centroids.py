"""Per-class regression targets: class means or within-class k-means centres."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import seeds
from .data import DataError, Dataset


@dataclass(frozen=True)
class CentroidMap:
    """Centroids per class plus the fixed sample -> (class, centre) assignment."""

    centroids: tuple[np.ndarray, ...]  # one (k_j, D) array per class
    assignment: np.ndarray  # (N, 2): class index, centre index within class

    @property
    def n_features(self) -> int:
        return self.centroids[0].shape[1]

    def all_centroids(self) -> np.ndarray:
        return np.vstack(self.centroids)


def class_means(data: Dataset) -> CentroidMap:
    data.check_all_classes()
    cents = tuple(data.features[data.labels == j].mean(axis=0, keepdims=True)
                  for j in range(data.n_classes))
    assignment = np.column_stack([data.labels, np.zeros(data.n_samples, dtype=int)])
    return CentroidMap(cents, assignment)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def lloyd(X: np.ndarray, init: np.ndarray, max_iters: int = 300, tol: float = 1e-6,
          costs: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations from the given centres.

    Returns (centres, labels) where every centre is the mean of its members.
    If ``costs`` is given, the within-cluster cost after every assignment
    step is appended to it.
    """
    C = np.array(init, dtype=float)
    k = C.shape[0]
    labels = None
    for _ in range(max_iters):
        d = _sq_dists(X, C)
        new = d.argmin(axis=1)
        new = _repair_empty(d, new, k)
        if costs is not None:
            costs.append(float(d[np.arange(len(X)), new].sum()))
        C_new = np.vstack([X[new == c].mean(axis=0) for c in range(k)])
        shift = np.sqrt(((C_new - C) ** 2).sum(axis=1)).max()
        converged = labels is not None and np.array_equal(new, labels)
        labels, C = new, C_new
        if converged or shift < tol:
            break
    return C, labels


def _repair_empty(d: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    labels = labels.copy()
    for c in range(k):
        if np.any(labels == c):
            continue
        # steal the worst-fit sample from a cluster that can spare it
        own = d[np.arange(len(labels)), labels]
        sizes = np.bincount(labels, minlength=k)
        own = np.where(sizes[labels] > 1, own, -np.inf)
        labels[int(own.argmax())] = c
    return labels


def kmeans_per_class(data: Dataset, k: int = 1, seed: int = 0,
                     max_iters: int = 300, tol: float = 1e-6) -> CentroidMap:
    """Run k-means independently inside each class.

    Initial centres are k distinct samples of the class drawn uniformly
    (Forgy) from a generator derived from ``(seed, class index)``.  With
    ``k == 1`` the result is exactly :func:`class_means`.
    """
    if k < 1:
        raise DataError("k must be at least 1")
    data.check_all_classes()
    counts = data.class_counts()
    if (counts < k).any():
        j = int(np.flatnonzero(counts < k)[0])
        raise DataError(f"class {data.class_names[j]!r} has {counts[j]} samples, fewer than k={k}")
    if k == 1:
        return class_means(data)

    cents = []
    assignment = np.empty((data.n_samples, 2), dtype=int)
    for j in range(data.n_classes):
        rows = data.class_indices(j)
        X = data.features[rows]
        rng = seeds.derive_rng(seed, seeds.KMEANS, j)
        init = X[rng.choice(len(X), size=k, replace=False)]
        C, lab = lloyd(X, init, max_iters=max_iters, tol=tol)
        cents.append(C)
        assignment[rows, 0] = j
        assignment[rows, 1] = lab
    return CentroidMap(tuple(cents), assignment)


def targets_for(cmap: CentroidMap, data: Dataset) -> np.ndarray:
    """Regression target for every row: the centre it was assigned to."""
    if data.n_features != cmap.n_features:
        raise DataError(f"dimension mismatch: {data.n_features} vs {cmap.n_features}")
    if len(cmap.centroids) != data.n_classes:
        raise DataError("class count mismatch between centroid map and dataset")
    if cmap.assignment.shape[0] != data.n_samples or not np.array_equal(cmap.assignment[:, 0], data.labels):
        raise DataError("centroid assignment does not belong to this dataset")
    T = np.empty((data.n_samples, data.n_features))
    for j, C in enumerate(cmap.centroids):
        rows = np.flatnonzero(cmap.assignment[:, 0] == j)
        T[rows] = C[cmap.assignment[rows, 1]]
    return T


def within_class_cost(cmap: CentroidMap, data: Dataset) -> float:
    return float(((data.features - targets_for(cmap, data)) ** 2).sum())
