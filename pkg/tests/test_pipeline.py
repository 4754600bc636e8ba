import numpy as np
import pytest

from sce import network, pipeline, synthetic
from sce.classifier import TrainConfig
from sce.data import SplitSpec, make_folds, split
from sce.network import SceHyperparams
from sce.pipeline import SweepGrid

QUICK_CLF = TrainConfig(epochs=40)
HYPER = SceHyperparams(lam=0.001, hidden_width=10, scg_iterations=15, seed=3)


@pytest.fixture(scope="module")
def parts():
    ds, inf = synthetic.planted_features(n_samples=160, n_features=12, seed=2)
    tr, va, te = split(ds, SplitSpec(0.6, 0.2, 0.2, seed=0))
    return tr, va, te, inf


def test_loss_split_sums_to_total(parts):
    tr = parts[0]
    model, ranking, rec = pipeline.train_sce(tr, HYPER)
    assert abs(rec.centroid_cost + rec.l1_cost - rec.trace["final_cost"]) <= 1e-10
    assert rec.l1_cost == pytest.approx(HYPER.lam * np.abs(model.spl).sum(), rel=1e-12)
    assert rec.trace["accepted_costs_monotone"]
    assert rec.trace["accepted_steps"] <= HYPER.scg_iterations


def test_train_deterministic(parts):
    tr = parts[0]
    m1, r1, _ = pipeline.train_sce(tr, HYPER)
    m2, r2, _ = pipeline.train_sce(tr, HYPER)
    np.testing.assert_array_equal(network.pack(m1), network.pack(m2))
    assert r1.to_csv(tr.feature_names) == r2.to_csv(tr.feature_names)


def test_standardization_recorded(parts):
    tr = parts[0]
    _, _, rec = pipeline.train_sce(tr, HYPER)
    np.testing.assert_allclose(rec.standardization.mean, tr.features.mean(axis=0))
    _, _, raw = pipeline.train_sce(tr, HYPER, standardize=False)
    assert raw.standardization is None


def test_single_point_sweep(parts):
    tr, va, _, _ = parts
    grid = SweepGrid.single(HYPER)
    best, recs = pipeline.sweep(tr, va, grid, clf_config=QUICK_CLF)
    assert best == HYPER and len(recs) == 1
    assert 0.0 <= recs[0].validation_accuracy <= 1.0


def test_sweep_best_is_grid_point(parts):
    tr, va, _, _ = parts
    grid = SweepGrid(lams=(0.01, 0.001), hidden_layers=(1,), hidden_widths=(8,), iterations=(10,),
                     centers=(1, 2), seed=1)
    best, recs = pipeline.sweep(tr, va, grid, clf_config=QUICK_CLF)
    pts = grid.points()
    assert best in pts and len(recs) == len(pts) == 4
    top = max(r.validation_accuracy for r in recs)
    assert recs[pts.index(best)].validation_accuracy == top


def test_sweep_tie_break():
    grid = SweepGrid(lams=(0.01, 0.001), hidden_layers=(1,), hidden_widths=(8,), iterations=(10,), centers=(1,))
    pts = grid.points()
    assert pipeline._best_index([0.9, 0.9], [5, 3], pts, grid) == 1
    assert pipeline._best_index([0.9, 0.9], [3, 3], pts, grid) == 0
    assert pipeline._best_index([0.8, 0.9], [1, 9], pts, grid) == 1


def test_grid_subset_reproducible():
    g = SweepGrid(max_points=10, seed=4)
    a, b = g.points(), g.points()
    assert a == b and len(a) == 10
    full = SweepGrid(seed=4).points()
    assert all(p in full for p in a)
    assert len(full) == len(network.LAMBDA_GRID) * 2 * 5 * 4 * 5


def test_grid_rejects_empty_and_repeats():
    with pytest.raises(ValueError):
        SweepGrid(lams=())
    with pytest.raises(ValueError):
        SweepGrid(repeats=6)


def test_grid_round_trip():
    g = SweepGrid(lams=(0.01,), centers=(1, 2), top_k=5, repeats=3)
    assert SweepGrid.from_dict(g.to_dict()) == g


def test_cv_sweep_single_point(parts):
    tr = parts[0]
    folds = make_folds(tr, k=3, seed=0)
    best, summary = pipeline.cv_sweep(tr, folds, SweepGrid.single(HYPER), clf_config=QUICK_CLF)
    assert best == HYPER
    assert len(summary) == 1 and len(summary[0]["fold_accuracies"]) == 3


def test_analyze_lambda_single_row(parts):
    tr, va, _, _ = parts
    rows, recs = pipeline.analyze_lambda(tr, va, [0.01], HYPER, clf_config=QUICK_CLF)
    assert len(rows) == 1 and set(rows[0]) == set(pipeline.LAMBDA_COLUMNS)
    r = rows[0]
    assert r["lambda"] == 0.01
    assert r["l1_cost"] == recs[0].l1_norm
    assert r["weighted_l1_cost"] == pytest.approx(0.01 * r["l1_cost"], rel=1e-12)
    assert r["total_cost"] == pytest.approx(r["centroid_cost"] + r["weighted_l1_cost"], rel=1e-12)


def test_analyze_lambda_parallel_matches_serial(parts):
    tr, va, _, _ = parts
    a, _ = pipeline.analyze_lambda(tr, va, [0.01, 0.001], HYPER, clf_config=QUICK_CLF, jobs=1)
    b, _ = pipeline.analyze_lambda(tr, va, [0.01, 0.001], HYPER, clf_config=QUICK_CLF, jobs=2)
    assert a == b


def test_empty_selection_scores_zero(parts):
    tr, va, _, _ = parts
    from sce.cutoff import select
    assert pipeline.validation_accuracy(tr, va, select(np.zeros(tr.n_features))) == 0.0


def test_jaccard_extremes():
    assert pipeline.jaccard([1, 2, 3], [1, 2, 3]) == 1.0
    assert pipeline.jaccard([1, 2], [3, 4]) == 0.0
    assert pipeline.jaccard([], []) == 1.0
    assert pipeline.jaccard([1, 2], [2, 3]) == pytest.approx(1 / 3)


def test_stability_identical_seeds(parts):
    tr = parts[0]
    rep = pipeline.stability_report(tr, HYPER, run_seeds=[5, 5])
    assert rep.mean_jaccard == 1.0
    assert rep.selected[0] == rep.selected[1]


def test_overlap_stats_pairs():
    rep = pipeline.overlap_stats([[0, 1], [2, 3], [0, 1]], [0, 1, 2])
    assert [p["jaccard"] for p in rep.pairs] == [0.0, 1.0, 0.0]
    assert rep.to_dict()["selected_counts"] == [2, 2, 2]


def test_stability_needs_two_runs(parts):
    with pytest.raises(ValueError):
        pipeline.stability_report(parts[0], HYPER, run_seeds=[1])
