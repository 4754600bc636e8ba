"""End-to-end feature selection: standardise, centroids, SCG training, cut, evaluate."""

from __future__ import annotations

import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import network, seeds
from .centroids import kmeans_per_class, targets_for
from .classifier import TrainConfig, repeated_eval
from .cutoff import FeatureRanking, select
from .data import Dataset, FoldPlan, StandardizationParams, apply_standardizer, fit_standardizer
from .network import SceHyperparams, SceModel
from .scg import ScgConfig, minimize

log = logging.getLogger(__name__)

ANALYSIS_LAMBDAS = network.LAMBDA_GRID + (0.1,)


@dataclass
class RunRecord:
    hyper: SceHyperparams
    trace: dict
    centroid_cost: float
    l1_cost: float  # lambda * ||spl||_1
    l1_norm: float
    ranking: FeatureRanking
    standardization: StandardizationParams | None = None
    validation_accuracy: float | None = None
    wall_time: float = 0.0

    @property
    def total_cost(self) -> float:
        return self.centroid_cost + self.l1_cost

    @property
    def selected_count(self) -> int:
        return self.ranking.n_selected

    def to_dict(self, include_time: bool = True) -> dict:
        d = {
            "hyperparams": self.hyper.to_dict(),
            "seed": self.hyper.seed,
            "scg": self.trace,
            "centroid_cost": self.centroid_cost,
            "l1_cost": self.l1_cost,
            "l1_norm": self.l1_norm,
            "total_cost": self.total_cost,
            "elbow_index": self.ranking.elbow,
            "selected_count": self.selected_count,
            "selected": self.ranking.selected.tolist(),
            "validation_accuracy": self.validation_accuracy,
        }
        if include_time:
            d["wall_time"] = self.wall_time
        return d


def standardize_parts(train: Dataset, *others: Dataset | None):
    """Fit on ``train`` and apply the same transform to every other part."""
    params = fit_standardizer(train)
    out = [apply_standardizer(params, train)]
    out += [apply_standardizer(params, o) if o is not None else None for o in others]
    return params, out


def train_sce(train: Dataset, hyper: SceHyperparams, standardize: bool = True,
              scg_config: ScgConfig | None = None) -> tuple[SceModel, FeatureRanking, RunRecord]:
    t0 = time.perf_counter()
    params = None
    if standardize:
        params, (train,) = standardize_parts(train)
    cmap = kmeans_per_class(train, hyper.centers_per_class, seed=hyper.seed)
    T = targets_for(cmap, train)
    model0 = network.init_model(train.n_features, hyper)
    shape = model0.shape
    cfg = scg_config or ScgConfig(max_iterations=hyper.scg_iterations)
    theta, trace = minimize(network.objective(train.features, T, hyper.lam, shape), network.pack(model0), cfg)
    model = network.unpack(theta, shape)
    fit, l1 = network.loss_terms(model, train.features, T)
    ranking = select(model.spl)
    rec = RunRecord(hyper, trace.summary(), fit, hyper.lam * l1, l1, ranking, params,
                    wall_time=time.perf_counter() - t0)
    rec.trace["accepted_costs_monotone"] = bool(np.all(np.diff(trace.accepted_costs()) <= 0))
    return model, ranking, rec


def features_for(ranking: FeatureRanking, top_k: int | None) -> np.ndarray:
    if top_k is None:
        return ranking.selected
    return ranking.top_k(min(top_k, ranking.order.size))


def validation_accuracy(train: Dataset, validation: Dataset, ranking: FeatureRanking,
                        top_k: int | None = None, repeats: int = 1, eval_hidden: int = 50,
                        seed: int = 0, config: TrainConfig = TrainConfig()) -> float:
    cols = features_for(ranking, top_k)
    if cols.size == 0:
        return 0.0
    rep = repeated_eval(train, validation, cols, eval_hidden, repeats=repeats,
                        seed=seeds.derive_seed(seed, seeds.CLASSIFIER), config=config)
    return rep.mean


# --- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    lams: tuple[float, ...] = network.LAMBDA_GRID
    hidden_layers: tuple[int, ...] = network.LAYER_GRID
    hidden_widths: tuple[int, ...] = network.WIDTH_GRID
    iterations: tuple[int, ...] = network.ITERATION_GRID
    centers: tuple[int, ...] = network.CENTERS_GRID
    seed: int = 0
    top_k: int | None = None
    repeats: int = 1
    eval_hidden: int = 50
    max_points: int | None = None  # random subset of the Cartesian product

    def __post_init__(self):
        for name in ("lams", "hidden_layers", "hidden_widths", "iterations", "centers"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"grid field {name!r} is empty")
            object.__setattr__(self, name, vals)
        if not 1 <= self.repeats <= 5:
            raise ValueError("selection repeats must be in 1..5")

    def points(self) -> list[SceHyperparams]:
        pts = [SceHyperparams(lam=lam, hidden_layers=L, hidden_width=H, scg_iterations=it,
                              centers_per_class=k, seed=self.seed)
               for lam, L, H, it, k in itertools.product(self.lams, self.hidden_layers, self.hidden_widths,
                                                         self.iterations, self.centers)]
        if self.max_points is not None and self.max_points < len(pts):
            keep = np.sort(seeds.derive_rng(self.seed, seeds.SUBSET).choice(len(pts), self.max_points,
                                                                            replace=False))
            pts = [pts[i] for i in keep]
        return pts

    def to_dict(self) -> dict:
        return {
            "lams": list(self.lams), "hidden_layers": list(self.hidden_layers),
            "hidden_widths": list(self.hidden_widths), "iterations": list(self.iterations),
            "centers": list(self.centers), "seed": self.seed, "top_k": self.top_k,
            "repeats": self.repeats, "eval_hidden": self.eval_hidden, "max_points": self.max_points,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SweepGrid:
        return cls(**d)

    @classmethod
    def single(cls, hyper: SceHyperparams, **kw) -> SweepGrid:
        return cls(lams=(hyper.lam,), hidden_layers=(hyper.hidden_layers,), hidden_widths=(hyper.hidden_width,),
                   iterations=(hyper.scg_iterations,), centers=(hyper.centers_per_class,), seed=hyper.seed, **kw)


def _evaluate_point(job) -> RunRecord:
    hyper, train, validation, grid, standardize, clf_config = job
    if standardize:
        _, (train, validation) = standardize_parts(train, validation)
    _, ranking, rec = train_sce(train, hyper, standardize=False)
    rec.validation_accuracy = validation_accuracy(train, validation, ranking, grid.top_k, grid.repeats,
                                                  grid.eval_hidden, seed=hyper.seed, config=clf_config)
    return rec


def _map(fn, jobs: list, n_jobs: int | None) -> list:
    n_jobs = n_jobs or 1
    if n_jobs <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs))  # preserves submission order


def _best_index(scores: Sequence[float], counts: Sequence[float], points: Sequence[SceHyperparams],
                grid: SweepGrid) -> int:
    # highest accuracy, then fewer features, then earlier lambda, then grid order
    lam_pos = {lam: i for i, lam in enumerate(grid.lams)}
    keys = [(-scores[i], counts[i], lam_pos.get(p.lam, len(lam_pos)), i) for i, p in enumerate(points)]
    return min(keys)[-1]


def sweep(train: Dataset, validation: Dataset, grid: SweepGrid, standardize: bool = True,
          jobs: int | None = 1, clf_config: TrainConfig = TrainConfig()) -> tuple[SceHyperparams, list[RunRecord]]:
    points = grid.points()
    records = _map(_evaluate_point, [(p, train, validation, grid, standardize, clf_config) for p in points], jobs)
    best = _best_index([r.validation_accuracy for r in records], [r.selected_count for r in records],
                       points, grid)
    return points[best], records


def cv_sweep(train: Dataset, folds: FoldPlan, grid: SweepGrid, standardize: bool = True,
             jobs: int | None = 1, clf_config: TrainConfig = TrainConfig()) -> tuple[SceHyperparams, list[dict]]:
    """Score every grid point by mean held-out-fold accuracy."""
    points = grid.points()
    job_list = []
    for p in points:
        for i, held in enumerate(folds.folds):
            job_list.append((p, train.subset(folds.train_indices(i)), train.subset(held), grid,
                             standardize, clf_config))
    recs = _map(_evaluate_point, job_list, jobs)
    k = folds.k
    summary = []
    for pi, p in enumerate(points):
        fold_recs = recs[pi * k:(pi + 1) * k]
        summary.append({
            "hyperparams": p.to_dict(),
            "fold_accuracies": [r.validation_accuracy for r in fold_recs],
            "mean_accuracy": float(np.mean([r.validation_accuracy for r in fold_recs])),
            "mean_selected": float(np.mean([r.selected_count for r in fold_recs])),
        })
    best = _best_index([s["mean_accuracy"] for s in summary], [s["mean_selected"] for s in summary],
                       points, grid)
    return points[best], summary


# --- analyses ----------------------------------------------------------------

LAMBDA_COLUMNS = ("lambda", "centroid_cost", "l1_cost", "weighted_l1_cost", "total_cost",
                  "validation_accuracy", "selected_count")


def analyze_lambda(train: Dataset, validation: Dataset, lambdas: Iterable[float], base: SceHyperparams,
                   standardize: bool = True, top_k: int | None = None, eval_hidden: int = 50,
                   jobs: int | None = 1, clf_config: TrainConfig = TrainConfig()) -> tuple[list[dict], list[RunRecord]]:
    """One training per lambda with a shared seed; rows are plot-ready.

    ``l1_cost`` is the unweighted norm of the sparsity layer and
    ``weighted_l1_cost`` the penalty actually paid, lambda times that norm.
    """
    points = [replace(base, lam=float(lam)) for lam in lambdas]
    grid = SweepGrid.single(base, top_k=top_k, eval_hidden=eval_hidden)
    recs = _map(_evaluate_point, [(p, train, validation, grid, standardize, clf_config) for p in points], jobs)
    rows = [{
        "lambda": r.hyper.lam,
        "centroid_cost": r.centroid_cost,
        "l1_cost": r.l1_norm,
        "weighted_l1_cost": r.l1_cost,
        "total_cost": r.total_cost,
        "validation_accuracy": r.validation_accuracy,
        "selected_count": r.selected_count,
    } for r in recs]
    return rows, recs


def jaccard(a: Iterable[int], b: Iterable[int]) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 1.0


@dataclass
class StabilityReport:
    seeds: list[int]
    selected: list[list[int]]
    pairs: list[dict] = field(default_factory=list)

    @property
    def mean_jaccard(self) -> float:
        return float(np.mean([p["jaccard"] for p in self.pairs])) if self.pairs else 1.0

    def to_dict(self) -> dict:
        return {
            "seeds": self.seeds,
            "selected_counts": [len(s) for s in self.selected],
            "selected": self.selected,
            "pairs": self.pairs,
            "mean_jaccard": self.mean_jaccard,
        }


def overlap_stats(selected: Sequence[Iterable[int]], run_seeds: Sequence[int]) -> StabilityReport:
    sets = [sorted(set(int(i) for i in s)) for s in selected]
    pairs = []
    for i, j in itertools.combinations(range(len(sets)), 2):
        a, b = set(sets[i]), set(sets[j])
        pairs.append({"runs": [i, j], "seeds": [run_seeds[i], run_seeds[j]], "intersection": len(a & b),
                      "union": len(a | b), "jaccard": jaccard(a, b)})
    return StabilityReport(list(run_seeds), sets, pairs)


def _train_selected(job):
    train, hyper, standardize = job
    return select_only(train, hyper, standardize)


def select_only(train: Dataset, hyper: SceHyperparams, standardize: bool = True) -> list[int]:
    return train_sce(train, hyper, standardize)[1].selected.tolist()


def stability_report(train: Dataset, hyper: SceHyperparams, runs: int = 2, run_seeds: Sequence[int] | None = None,
                     standardize: bool = True, jobs: int | None = 1) -> StabilityReport:
    """Selected-set overlap across independently seeded trainings."""
    if run_seeds is None:
        run_seeds = [hyper.seed + r for r in range(runs)]
    run_seeds = [int(s) for s in run_seeds]
    if len(run_seeds) < 2:
        raise ValueError("stability needs at least 2 runs")
    sel = _map(_train_selected, [(train, replace(hyper, seed=s), standardize) for s in run_seeds], jobs)
    return overlap_stats(sel, run_seeds)


def default_jobs() -> int:
    return os.cpu_count() or 1
