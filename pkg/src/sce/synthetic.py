"""Synthetic datasets with known ground truth."""

from __future__ import annotations

import numpy as np

from .data import Dataset, from_arrays


def planted_features(n_samples: int = 200, n_features: int = 100, n_informative: int = 5,
                     separation: float = 3.0, n_classes: int = 2,
                     seed: int = 0) -> tuple[Dataset, np.ndarray]:
    """Unit-variance Gaussian noise with class signal in ``n_informative`` random columns.

    In an informative column the class means are ``separation`` standard
    deviations apart (consecutive classes).  Returns the dataset and the
    sorted informative column indices.
    """
    rng = np.random.default_rng(seed)
    informative = np.sort(rng.choice(n_features, size=n_informative, replace=False))
    y = np.arange(n_samples) % n_classes
    rng.shuffle(y)
    X = rng.standard_normal((n_samples, n_features))
    offsets = (np.arange(n_classes) - (n_classes - 1) / 2) * separation
    for d in informative:
        sign = rng.choice([-1.0, 1.0])
        X[:, d] += sign * offsets[y]
    return from_arrays(X, y), informative


def bimodal_classes(n_per_cluster: int = 40, n_noise: int = 10, radius: float = 4.0,
                    spread: float = 0.5, seed: int = 0) -> tuple[Dataset, np.ndarray]:
    """Three classes, each a pair of opposite clusters on a hexagon in two columns.

    The second cluster of every class is the point reflection of the first
    (noise columns included), so each class mean is exactly the origin and a
    single centroid per class carries no class signal at all.  Returns the
    dataset and the two informative column indices.
    """
    rng = np.random.default_rng(seed)
    D = 2 + n_noise
    rows, labels = [], []
    for c in range(3):
        ang = np.pi * c / 3
        centre = np.zeros(D)
        centre[:2] = radius * np.array([np.cos(ang), np.sin(ang)])
        pts = centre + np.hstack([spread * rng.standard_normal((n_per_cluster, 2)),
                                  rng.standard_normal((n_per_cluster, n_noise))])
        rows += [pts, -pts]
        labels += [c] * (2 * n_per_cluster)
    X = np.vstack(rows)
    y = np.asarray(labels)
    perm = rng.permutation(len(y))
    return from_arrays(X[perm], y[perm]), np.array([0, 1])


def blobs(n_per_class: int = 50, n_features: int = 2, separation: float = 6.0,
          seed: int = 0) -> Dataset:
    """Two well-separated isotropic Gaussian blobs."""
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((n_per_class, n_features)) - separation / 2
    X1 = rng.standard_normal((n_per_class, n_features)) + separation / 2
    return from_arrays(np.vstack([X0, X1]), np.repeat([0, 1], n_per_class))
