"""One-hidden-layer ReLU/softmax classifier used only to score feature subsets."""

from __future__ import annotations

import json
import statistics
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .data import Dataset


class ClassifierError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    patience: int = 25


@dataclass
class EvalClassifier:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    epochs_run: int = 0

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} input columns, got shape {X.shape}")
        return softmax(np.maximum(X @ self.W1.T + self.b1, 0.0) @ self.W2.T + self.b2)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_and_grads(params, X, y):
    """Mean cross-entropy and its gradients for (W1, b1, W2, b2)."""
    W1, b1, W2, b2 = params
    n = X.shape[0]
    z1 = X @ W1.T + b1
    h = np.maximum(z1, 0.0)
    p = softmax(h @ W2.T + b2)
    loss = -np.log(np.clip(p[np.arange(n), y], 1e-300, None)).mean()
    dz2 = p.copy()
    dz2[np.arange(n), y] -= 1.0
    dz2 /= n
    dh = dz2 @ W2
    dz1 = dh * (z1 > 0)
    return float(loss), (dz1.T @ X, dz1.sum(axis=0), dz2.T @ h, dz2.sum(axis=0))


def accuracy(model: EvalClassifier, X: np.ndarray, y: np.ndarray) -> float:
    """Fraction of rows whose argmax class (lowest index on ties) equals the label."""
    y = np.asarray(y)
    return float(np.mean(model.predict(X) == y))


def train_classifier(X: np.ndarray, y: np.ndarray, hidden: int, config: TrainConfig = TrainConfig(),
                     seed: int = 0, n_classes: int | None = None,
                     X_val: np.ndarray | None = None, y_val: np.ndarray | None = None) -> EvalClassifier:
    """Momentum SGD on softmax cross-entropy.

    With a validation set the weights with the best validation accuracy are
    kept and training stops after ``config.patience`` epochs without
    improvement; otherwise the full epoch budget is used.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("need at least one feature column")
    M = int(y.max()) + 1 if n_classes is None else n_classes
    if M < 2 or np.unique(y).size < 2:
        raise ValueError("classifier needs at least two classes in the training labels")
    rng = np.random.default_rng(seed)
    K = X.shape[1]
    params = [
        rng.uniform(-1, 1, (hidden, K)) * np.sqrt(6.0 / K),
        np.zeros(hidden),
        rng.uniform(-1, 1, (M, hidden)) * np.sqrt(6.0 / (hidden + M)),
        np.zeros(M),
    ]
    vel = [np.zeros_like(p) for p in params]
    model = EvalClassifier(*params, config=config, seed=seed)

    use_val = X_val is not None and y_val is not None and len(y_val) > 0
    best_acc, best, stale = -1.0, None, 0
    n = X.shape[0]
    epoch = 0
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            loss, grads = cross_entropy_and_grads(params, X[idx], y[idx])
            if not np.isfinite(loss):
                raise ClassifierError(f"non-finite training loss at epoch {epoch}; config={asdict(config)}")
            for p, v, g in zip(params, vel, grads):
                v *= config.momentum
                v -= config.learning_rate * g
                p += v
        if use_val:
            acc = accuracy(model, X_val, y_val)
            if acc > best_acc:
                best_acc, best, stale = acc, [p.copy() for p in params], 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
    if use_val and best is not None:
        model.W1, model.b1, model.W2, model.b2 = best
    model.epochs_run = epoch
    return model


@dataclass
class EvaluationReport:
    accuracies: list[float]
    seeds: list[int]
    n_selected: int
    hidden: int
    config: dict = field(default_factory=dict)

    @property
    def repeats(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.accuracies)

    @property
    def std(self) -> float:
        return statistics.pstdev(self.accuracies)

    def to_dict(self) -> dict:
        return {
            "accuracies": self.accuracies,
            "mean": self.mean,
            "std": self.std,
            "repeats": self.repeats,
            "seeds": self.seeds,
            "n_selected": self.n_selected,
            "hidden": self.hidden,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> EvaluationReport:
        return cls(list(d["accuracies"]), list(d["seeds"]), d["n_selected"], d["hidden"], d.get("config", {}))


def repeated_eval(train: Dataset, test: Dataset, selected: Sequence[int], hidden: int,
                  repeats: int = 20, seed: int = 0, config: TrainConfig = TrainConfig(),
                  validation: Dataset | None = None) -> EvaluationReport:
    """Train ``repeats`` classifiers on the selected columns and score each on ``test``."""
    cols = np.asarray(selected, dtype=int)
    if cols.size == 0:
        raise ValueError("no features selected")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    Xtr, Xte = train.features[:, cols], test.features[:, cols]
    Xva = validation.features[:, cols] if validation is not None else None
    yva = validation.labels if validation is not None else None
    accs, used = [], []
    for r in range(repeats):
        s = seed + r
        clf = train_classifier(Xtr, train.labels, hidden, config, seed=s,
                               n_classes=train.n_classes, X_val=Xva, y_val=yva)
        accs.append(accuracy(clf, Xte, test.labels))
        used.append(s)
    echo = {**asdict(config), "features": cols.tolist(), "base_seed": seed}
    return EvaluationReport(accs, used, int(cols.size), hidden, echo)


def select_hidden(train: Dataset, validation: Dataset, selected: Sequence[int], grid: Sequence[int],
                  seed: int = 0, config: TrainConfig = TrainConfig()) -> tuple[int, dict[int, float]]:
    """Pick the hidden width with the best validation accuracy (smaller width on ties)."""
    scores = {}
    for h in grid:
        rep = repeated_eval(train, validation, selected, h, repeats=1, seed=seed, config=config)
        scores[h] = rep.mean
    best = max(sorted(scores), key=lambda h: scores[h])
    return best, scores
