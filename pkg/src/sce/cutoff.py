"""Feature ranking by sparsity-layer magnitude and the elbow cut."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class FeatureRanking:
    order: np.ndarray
    sorted_abs: np.ndarray
    elbow: int | None  # None when the curve is too short to have an elbow
    selected: np.ndarray

    @property
    def n_selected(self) -> int:
        return int(self.selected.size)

    def top_k(self, k: int) -> np.ndarray:
        return top_k(self.order, k)

    def to_csv(self, feature_names: Sequence[str] | None = None) -> str:
        chosen = set(self.selected.tolist())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature_index", "feature_name", "abs_weight", "selected"])
        for rank, (d, mag) in enumerate(zip(self.order.tolist(), self.sorted_abs.tolist())):
            name = feature_names[d] if feature_names is not None else f"f{d}"
            w.writerow([rank, d, name, repr(mag), int(d in chosen)])
        return buf.getvalue()

    def write_csv(self, path: str | Path, feature_names: Sequence[str] | None = None) -> None:
        Path(path).write_text(self.to_csv(feature_names), encoding="utf-8")


def rank_features(spl: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices by |weight| descending; equal magnitudes keep index order."""
    mag = np.abs(np.asarray(spl, dtype=float))
    if mag.ndim != 1 or mag.size < 1:
        raise ValueError("spl must be a non-empty vector")
    order = np.argsort(-mag, kind="stable")
    return order, mag[order]


def chord_distances(y: np.ndarray) -> np.ndarray:
    """Perpendicular distance of each (i, y_i) to the line through the end points."""
    y = np.asarray(y, dtype=float)
    n = y.size
    x = np.arange(n, dtype=float)
    x0, y0, x1, y1 = 0.0, y[0], float(n - 1), y[-1]
    num = np.abs((x1 - x0) * (y0 - y) - (x0 - x) * (y1 - y0))
    return num / np.sqrt((x1 - x0) ** 2 + (y1 - y0) ** 2)


NEAR_TIE = 1e-12


def elbow_index(sorted_abs: np.ndarray) -> int:
    y = np.asarray(sorted_abs, dtype=float)
    if y.size < 3:
        raise ValueError("need at least 3 points to locate an elbow")
    d = chord_distances(y)
    near = np.flatnonzero(d >= d.max() * (1 - NEAR_TIE))
    if near.size == 1:
        return int(near[0])
    # rounding can split a true tie either way; settle near-ties in exact arithmetic
    n, y0, y1 = len(y) - 1, Fraction(y[0]), Fraction(y[-1])
    exact = [abs(n * (y0 - Fraction(y[i])) + int(i) * (y1 - y0)) for i in near]
    return int(near[exact.index(max(exact))])  # first maximum wins


def select(spl: np.ndarray) -> FeatureRanking:
    """Keep features whose magnitude is strictly above the elbow point's."""
    order, sorted_abs = rank_features(spl)
    if sorted_abs.size < 3:
        return FeatureRanking(order, sorted_abs, None, order.copy())
    p = elbow_index(sorted_abs)
    return FeatureRanking(order, sorted_abs, p, order[sorted_abs > sorted_abs[p]])


def top_k(order: np.ndarray, k: int) -> np.ndarray:
    order = np.asarray(order)
    if not 1 <= k <= order.size:
        raise ValueError(f"k={k} outside 1..{order.size}")
    return order[:k].copy()
