"""Hierarchical seed derivation.

A run seed fans out into independent streams for each stochastic
component, so changing e.g. the classifier seed never perturbs the
k-means initialisation.
"""

import numpy as np

SPLIT = 11
FOLDS = 12
KMEANS = 13
INIT = 14
CLASSIFIER = 15
SUBSET = 16


def derive_rng(seed: int, label: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(label), *map(int, extra)])


def derive_seed(seed: int, label: int, *extra: int) -> int:
    return int(derive_rng(seed, label, *extra).integers(0, 2**31 - 1))
