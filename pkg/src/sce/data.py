"""Dataset ingestion, imputation, standardisation, splits and folds."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeds

MISSING_MARKERS = frozenset({"", "na", "nan"})


class DataError(ValueError):
    """Raised for malformed input files or impossible data requests."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=int)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError("labels length does not match number of rows")
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match number of columns")
        if np.isnan(X).any():
            raise DataError("features contain missing values")
        if y.size and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise DataError("label out of range")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.labels == j)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def check_all_classes(self) -> None:
        missing = np.flatnonzero(self.class_counts() == 0)
        if missing.size:
            raise DataError(f"classes with no samples: {[self.class_names[j] for j in missing]}")

    def subset(self, rows: Sequence[int]) -> Dataset:
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names, self.class_names)

    def with_features(self, features: np.ndarray) -> Dataset:
        return Dataset(features, self.labels, self.feature_names, self.class_names)

    def select_columns(self, columns: Sequence[int]) -> Dataset:
        columns = np.asarray(columns, dtype=int)
        return Dataset(
            self.features[:, columns],
            self.labels,
            tuple(self.feature_names[c] for c in columns),
            self.class_names,
        )


def from_arrays(X, y, feature_names=None, class_names=None) -> Dataset:
    """Build a Dataset from a matrix and integer labels 0..M-1."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if feature_names is None:
        feature_names = [f"f{d}" for d in range(X.shape[1])]
    if class_names is None:
        class_names = [str(j) for j in range(int(y.max()) + 1)]
    return Dataset(X, y, tuple(feature_names), tuple(class_names))


def _parse_cell(cell: str) -> float:
    s = cell.strip()
    if s.lower() in MISSING_MARKERS:
        return math.nan
    return float(s)


def load_csv(
    path: str | Path,
    label_column: str | int,
    missing_policy: str = "fail",
    delimiter: str = ",",
) -> Dataset:
    """Read a headed CSV into a Dataset.

    Labels are relabelled to 0..M-1 in order of first appearance.  With
    ``missing_policy="mean_impute"`` missing cells (empty, NA, NaN) are
    replaced by the mean of the observed entries in their column.
    """
    if missing_policy not in ("fail", "mean_impute"):
        raise DataError(f"unknown missing_policy {missing_policy!r}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")

    if isinstance(label_column, int) or (isinstance(label_column, str) and label_column.isdigit()
                                         and label_column not in header):
        li = int(label_column)
        if not 0 <= li < len(header):
            raise DataError(f"label column index {li} out of range")
    else:
        if label_column not in header:
            raise DataError(f"label column {label_column!r} not in header")
        li = header.index(label_column)

    feat_cols = [c for c in range(len(header)) if c != li]
    X = np.empty((len(body), len(feat_cols)))
    raw_labels = []
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r + 2} has {len(row)} fields, expected {len(header)}")
        raw_labels.append(row[li].strip())
        for k, c in enumerate(feat_cols):
            try:
                X[r, k] = _parse_cell(row[c])
            except ValueError:
                raise DataError(f"{path}: non-numeric cell {row[c]!r} at row {r + 2}, "
                                f"column {header[c]!r}") from None

    if np.isnan(X).any():
        if missing_policy == "fail":
            r, k = np.argwhere(np.isnan(X))[0]
            raise DataError(f"{path}: missing value at row {r + 2}, column {header[feat_cols[k]]!r}")
        X = impute_mean(X, names=[header[c] for c in feat_cols])

    class_names: list[str] = []
    index: dict[str, int] = {}
    labels = np.empty(len(body), dtype=int)
    for r, lab in enumerate(raw_labels):
        if lab not in index:
            index[lab] = len(class_names)
            class_names.append(lab)
        labels[r] = index[lab]
    if len(class_names) < 2:
        raise DataError(f"{path}: need at least 2 classes, found {len(class_names)}")

    return Dataset(X, labels, tuple(header[c] for c in feat_cols), tuple(class_names))


def impute_mean(X: np.ndarray, names: Sequence[str] | None = None) -> np.ndarray:
    X = np.array(X, dtype=float)
    missing = np.isnan(X)
    if not missing.any():
        return X
    all_missing = missing.all(axis=0)
    if all_missing.any():
        d = int(np.flatnonzero(all_missing)[0])
        name = names[d] if names is not None else d
        raise DataError(f"column {name!r} is entirely missing")
    means = np.nanmean(X, axis=0)
    r, c = np.nonzero(missing)
    X[r, c] = means[c]
    return X


def write_csv(data: Dataset, path: str | Path, label_name: str = "label", delimiter: str = ",") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow([*data.feature_names, label_name])
        for x, y in zip(data.features, data.labels):
            w.writerow([*(repr(float(v)) for v in x), data.class_names[y]])


# --- standardisation -------------------------------------------------------

@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.mean.shape[0]:
            raise DataError(f"dimension mismatch: data has {X.shape[-1]} features, "
                            f"params have {self.mean.shape[0]}")
        return (X - self.mean) / self.scale

    def invert(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> StandardizationParams:
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


def fit_standardizer(train: Dataset) -> StandardizationParams:
    if train.n_samples == 0:
        raise DataError("cannot fit a standardizer on an empty dataset")
    mean = train.features.mean(axis=0)
    scale = train.features.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    return StandardizationParams(mean, scale)


def apply_standardizer(params: StandardizationParams, data: Dataset) -> Dataset:
    return data.with_features(params.apply(data.features))


# --- splits and folds -----------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    validation: float = 0.1
    test: float = 0.2
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        fr = self.fractions
        if any(f < 0 for f in fr) or fr[0] <= 0:
            raise DataError(f"invalid split fractions {fr}")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise DataError(f"split fractions must sum to 1, got {sum(fr)!r}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train, self.validation, self.test)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    folds: tuple[np.ndarray, ...]
    seed: int = 0

    def train_indices(self, i: int) -> np.ndarray:
        return np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))


def part_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Floor each part, then hand the remainder out in part order."""
    sizes = [math.floor(n * f) for f in fractions]
    rem = n - sum(sizes)
    p = 0
    while rem > 0:
        if fractions[p] > 0:
            sizes[p] += 1
            rem -= 1
        p = (p + 1) % len(sizes)
    return sizes


def _canonical_order(X: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # sort rows by content so the result does not depend on input row order
    if rows.size == 0:
        return rows
    keys = X[rows].T[::-1]
    return rows[np.lexsort(keys)]


def _shuffled_groups(data: Dataset, stratified: bool, rng_label: int, seed: int) -> list[np.ndarray]:
    if stratified:
        groups = [data.class_indices(j) for j in range(data.n_classes)]
    else:
        groups = [np.arange(data.n_samples)]
    out = []
    for g, rows in enumerate(groups):
        rows = _canonical_order(data.features, rows)
        out.append(rows[seeds.derive_rng(seed, rng_label, g).permutation(rows.size)])
    return out


def split_indices(data: Dataset, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    parts: list[list[np.ndarray]] = [[], [], []]
    for g, rows in enumerate(_shuffled_groups(data, spec.stratified, seeds.SPLIT, spec.seed)):
        sizes = part_sizes(rows.size, spec.fractions)
        if spec.stratified:
            for p, (s, f) in enumerate(zip(sizes, spec.fractions)):
                if f > 0 and s == 0:
                    raise DataError(f"class {data.class_names[g]!r} has {rows.size} samples, "
                                    f"too few to stratify fractions {spec.fractions}")
        bounds = np.cumsum([0, *sizes])
        for p in range(3):
            parts[p].append(rows[bounds[p]:bounds[p + 1]])
    return tuple(np.sort(np.concatenate(p)).astype(int) for p in parts)  # type: ignore[return-value]


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    return tuple(data.subset(ix) for ix in split_indices(data, spec))  # type: ignore[return-value]


def make_folds(data: Dataset, k: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified k-fold plan.

    Each class is dealt round-robin into the folds, continuing from the
    fold where the previous class stopped so fold sizes stay balanced.
    """
    if k < 2:
        raise DataError("fold count must be at least 2")
    counts = data.class_counts()
    small = np.flatnonzero(counts < k)
    if small.size:
        j = int(small[0])
        raise DataError(f"class {data.class_names[j]!r} has {counts[j]} samples, fewer than k={k}")
    folds: list[list[int]] = [[] for _ in range(k)]
    pos = 0
    for rows in _shuffled_groups(data, True, seeds.FOLDS, seed):
        for r in rows:
            folds[pos % k].append(int(r))
            pos += 1
    return FoldPlan(k, tuple(np.sort(np.asarray(f, dtype=int)) for f in folds), seed)
