import statistics

import numpy as np
import pytest

from sce import synthetic
from sce.classifier import (
    ClassifierError, EvalClassifier, EvaluationReport, TrainConfig, accuracy, cross_entropy_and_grads,
    repeated_eval, softmax, train_classifier,
)
from sce.data import split, SplitSpec

from .oracles import central_differences, max_rel_error

FAST = TrainConfig(epochs=200)


def fixed_model(W1, b1, W2, b2):
    return EvalClassifier(np.asarray(W1, float), np.asarray(b1, float), np.asarray(W2, float), np.asarray(b2, float))


def test_separable_blobs_train_accuracy():
    ds = synthetic.blobs(n_per_class=40, seed=0)
    clf = train_classifier(ds.features, ds.labels, 8, FAST, seed=1)
    assert accuracy(clf, ds.features, ds.labels) == 1.0


def test_single_class_rejected():
    with pytest.raises(ValueError):
        train_classifier(np.zeros((5, 2)), np.zeros(5, dtype=int), 4)


def test_deterministic_weights():
    ds = synthetic.blobs(seed=2)
    a = train_classifier(ds.features, ds.labels, 6, TrainConfig(epochs=20), seed=5)
    b = train_classifier(ds.features, ds.labels, 6, TrainConfig(epochs=20), seed=5)
    for p, q in [(a.W1, b.W1), (a.b1, b.b1), (a.W2, b.W2), (a.b2, b.b2)]:
        np.testing.assert_array_equal(p, q)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_loss_reported():
    ds = synthetic.blobs(seed=3)
    with pytest.raises(ClassifierError, match="learning_rate"):
        train_classifier(ds.features * 1e6, ds.labels, 4, TrainConfig(epochs=50, learning_rate=1e6), seed=0)


def test_accuracy_identity_and_complement():
    # logits equal to the inputs: prediction = argmax of the two columns
    m = fixed_model(np.eye(2), np.zeros(2), np.eye(2), np.zeros(2))
    X = np.array([[2.0, 1.0], [0.0, 3.0], [5.0, 0.0], [1.0, 4.0]])
    y = np.array([0, 1, 0, 1])
    assert accuracy(m, X, y) == 1.0
    y_mixed = np.array([0, 0, 0, 1])
    assert accuracy(m, X, 1 - y_mixed) == pytest.approx(1 - accuracy(m, X, y_mixed))


def test_accuracy_ties_lowest_class():
    m = fixed_model(np.zeros((1, 2)), np.zeros(1), np.zeros((3, 1)), np.zeros(3))
    assert m.predict(np.ones((4, 2))).tolist() == [0, 0, 0, 0]


def test_accuracy_scalar_oracle():
    rng = np.random.default_rng(4)
    m = fixed_model(rng.normal(size=(5, 3)), rng.normal(size=5), rng.normal(size=(4, 5)), rng.normal(size=4))
    X, y = rng.normal(size=(100, 3)), rng.integers(0, 4, 100)
    correct = 0
    for x, lab in zip(X, y):
        h = [max(0.0, sum(m.W1[o, i] * x[i] for i in range(3)) + m.b1[o]) for o in range(5)]
        z = [sum(m.W2[c, o] * h[o] for o in range(5)) + m.b2[c] for c in range(4)]
        correct += int(max(range(4), key=lambda c: (z[c], -c)) == lab)
    assert accuracy(m, X, y) == correct / 100


def test_width_mismatch():
    m = fixed_model(np.eye(2), np.zeros(2), np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        accuracy(m, np.zeros((3, 3)), np.zeros(3, dtype=int))


def test_softmax_rows_sum_to_one():
    z = np.random.default_rng(5).normal(0, 30, size=(50, 7))
    assert np.abs(softmax(z).sum(axis=1) - 1).max() <= 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_cross_entropy_gradient(seed):
    rng = np.random.default_rng(seed)
    K, H, M, n = 3, 4, 3, 6
    shapes = [(H, K), (H,), (M, H), (M,)]
    sizes = [int(np.prod(s)) for s in shapes]
    theta = rng.normal(size=sum(sizes))
    X, y = rng.normal(size=(n, K)), rng.integers(0, M, n)

    def split_params(t):
        out, pos = [], 0
        for s, k in zip(shapes, sizes):
            out.append(t[pos:pos + k].reshape(s))
            pos += k
        return out

    loss, grads = cross_entropy_and_grads(split_params(theta), X, y)
    analytic = np.concatenate([g.ravel() for g in grads])
    num = central_differences(lambda t: cross_entropy_and_grads(split_params(t), X, y)[0], theta)
    assert max_rel_error(analytic, num) <= 1e-5


def test_repeated_eval_single_repeat():
    ds = synthetic.blobs(seed=6)
    tr, _, te = split(ds, SplitSpec(0.5, 0.0, 0.5, seed=0))
    rep = repeated_eval(tr, te, [0, 1], 8, repeats=1, config=FAST)
    assert rep.repeats == 1 and rep.std == 0.0
    assert rep.seeds == [0]


def test_repeated_eval_duplicate_test_same_mean():
    ds = synthetic.blobs(seed=7, separation=2.0)
    tr, _, te = split(ds, SplitSpec(0.5, 0.0, 0.5, seed=0))
    te2 = te.subset(np.concatenate([np.arange(te.n_samples)] * 2))
    a = repeated_eval(tr, te, [0, 1], 8, repeats=3, config=TrainConfig(epochs=30))
    b = repeated_eval(tr, te2, [0, 1], 8, repeats=3, config=TrainConfig(epochs=30))
    assert a.mean == b.mean


def test_repeated_eval_informative_features():
    ds, inf = synthetic.planted_features(n_samples=300, n_features=20, seed=1)
    tr, _, te = split(ds, SplitSpec(0.7, 0.0, 0.3, seed=1))
    rep = repeated_eval(tr, te, inf, 16, repeats=3, config=FAST)
    assert rep.mean >= 0.95


def test_column_restriction_all_columns():
    ds = synthetic.blobs(n_features=3, seed=8)
    tr, _, te = split(ds, SplitSpec(0.5, 0.0, 0.5, seed=0))
    cfg = TrainConfig(epochs=20)
    a = repeated_eval(tr, te, [0, 1, 2], 5, repeats=2, config=cfg)
    clf = train_classifier(tr.features, tr.labels, 5, cfg, seed=0, n_classes=2)
    assert a.accuracies[0] == accuracy(clf, te.features, te.labels)


def test_report_statistics_and_round_trip():
    rep = EvaluationReport([0.9, 0.95, 0.875, 1.0], [0, 1, 2, 3], 5, 50)
    d = rep.to_dict()
    assert d["mean"] == statistics.fmean(d["accuracies"])
    assert d["std"] == statistics.pstdev(d["accuracies"])
    assert EvaluationReport.from_dict(d).to_dict() == d


def test_validation_snapshot_and_early_stop():
    ds = synthetic.blobs(seed=9)
    tr, va, te = split(ds, SplitSpec(0.6, 0.2, 0.2, seed=0))
    clf = train_classifier(tr.features, tr.labels, 8, TrainConfig(epochs=500, patience=5), seed=0,
                           X_val=va.features, y_val=va.labels)
    assert clf.epochs_run < 500
    assert accuracy(clf, va.features, va.labels) == 1.0
