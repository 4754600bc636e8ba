"""Sparse centroid-encoder feature selection."""

from .cutoff import FeatureRanking, elbow_index, rank_features, select, top_k
from .data import Dataset, SplitSpec, load_csv
from .network import SceHyperparams, SceModel
from .pipeline import SweepGrid, train_sce

__all__ = [
    "Dataset", "FeatureRanking", "SceHyperparams", "SceModel", "SplitSpec", "SweepGrid",
    "elbow_index", "load_csv", "rank_features", "select", "top_k", "train_sce",
]
__version__ = "0.1.0"
