"""Sparse centroid-encoder network.

Input -> diagonal sparsity layer (one weight per feature, no bias, no
activation) -> one or two tanh hidden layers -> linear output of input
width.  The loss is the centroid mapping error plus an l1 penalty on the
sparsity layer only.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import seeds

ITERATION_GRID = (25, 50, 75, 100)
LAYER_GRID = (1, 2)
WIDTH_GRID = (50, 100, 200, 250, 500)
LAMBDA_GRID = (0.01, 0.001, 0.0001, 0.0002, 0.0004, 0.0006, 0.0008)
CENTERS_GRID = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class SceHyperparams:
    lam: float = 0.001
    hidden_layers: int = 1
    hidden_width: int = 50
    scg_iterations: int = 100
    centers_per_class: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.hidden_layers not in (1, 2):
            raise ValueError("hidden_layers must be 1 or 2")
        if self.hidden_width < 1 or self.scg_iterations < 1 or self.centers_per_class < 1:
            raise ValueError("hidden_width, scg_iterations and centers_per_class must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SceHyperparams:
        return cls(**d)


@dataclass(frozen=True)
class ModelShape:
    n_features: int
    hidden: tuple[int, ...]

    @property
    def layer_sizes(self) -> list[tuple[int, int]]:
        """(fan_out, fan_in) for every dense layer."""
        widths = [self.n_features, *self.hidden, self.n_features]
        return [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]

    @property
    def n_params(self) -> int:
        return self.n_features + sum(o * i + o for o, i in self.layer_sizes)


@dataclass
class SceModel:
    spl: np.ndarray
    layers: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def shape(self) -> ModelShape:
        return ModelShape(self.spl.shape[0], tuple(W.shape[0] for W, _ in self.layers[:-1]))

    def copy(self) -> SceModel:
        return SceModel(self.spl.copy(), [(W.copy(), b.copy()) for W, b in self.layers])


def init_model(n_features: int, hyper: SceHyperparams, seed: int | None = None) -> SceModel:
    """Sparsity weights start at one; dense weights are Glorot-uniform, biases zero."""
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    rng = seeds.derive_rng(hyper.seed if seed is None else seed, seeds.INIT)
    shape = ModelShape(n_features, (hyper.hidden_width,) * hyper.hidden_layers)
    layers = []
    for fan_out, fan_in in shape.layer_sizes:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-limit, limit, size=(fan_out, fan_in)), np.zeros(fan_out)))
    return SceModel(np.ones(n_features), layers)


def pack(model: SceModel) -> np.ndarray:
    parts = [model.spl.ravel()]
    for W, b in model.layers:
        parts += [W.ravel(), b.ravel()]
    return np.concatenate(parts)


def unpack(vec: np.ndarray, shape: ModelShape) -> SceModel:
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (shape.n_params,):
        raise ValueError(f"parameter vector has length {vec.size}, expected {shape.n_params}")
    D = shape.n_features
    spl = vec[:D].copy()
    pos = D
    layers = []
    for o, i in shape.layer_sizes:
        W = vec[pos:pos + o * i].reshape(o, i).copy()
        pos += o * i
        b = vec[pos:pos + o].copy()
        pos += o
        layers.append((W, b))
    return SceModel(spl, layers)


def _check_batch(model: SceModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.spl.shape[0]:
        raise ValueError(f"dimension mismatch: input has {X.shape[1]} features, model has {model.spl.shape[0]}")
    return X


def forward_batch(model: SceModel, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Row-wise forward pass; the cache holds the input of every dense layer."""
    X = _check_batch(model, X)
    a = X * model.spl
    cache = [a]
    for W, b in model.layers[:-1]:
        a = np.tanh(a @ W.T + b)
        cache.append(a)
    W, b = model.layers[-1]
    return a @ W.T + b, cache


def forward(model: SceModel, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    out, cache = forward_batch(model, np.asarray(x, dtype=float)[None, :])
    return out[0], [c[0] for c in cache]


def _check_targets(X, T):
    T = np.asarray(T, dtype=float)
    if T.shape != X.shape:
        raise ValueError(f"targets shape {T.shape} does not match batch shape {X.shape}")
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    return T


def loss_terms(model: SceModel, X: np.ndarray, T: np.ndarray) -> tuple[float, float]:
    """(centroid term, unweighted l1 norm of the sparsity layer)."""
    X = _check_batch(model, X)
    T = _check_targets(X, T)
    out, _ = forward_batch(model, X)
    return float(((T - out) ** 2).sum() / (2 * X.shape[0])), float(np.abs(model.spl).sum())


def loss_sce(model: SceModel, X: np.ndarray, T: np.ndarray, lam: float) -> float:
    fit, l1 = loss_terms(model, X, T)
    return fit + lam * l1


def loss_and_grad(model: SceModel, X: np.ndarray, T: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
    X = _check_batch(model, X)
    T = _check_targets(X, T)
    N = X.shape[0]
    out, cache = forward_batch(model, X)
    err = out - T
    cost = float((err ** 2).sum() / (2 * N) + lam * np.abs(model.spl).sum())

    delta = err / N
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for li in range(len(model.layers) - 1, -1, -1):
        W, _ = model.layers[li]
        a_in = cache[li]
        grads.append((delta.T @ a_in, delta.sum(axis=0)))
        delta = delta @ W
        if li > 0:
            delta = delta * (1.0 - a_in ** 2)
    grads.reverse()
    g_spl = (delta * X).sum(axis=0) + lam * np.sign(model.spl)

    parts = [g_spl]
    for gW, gb in grads:
        parts += [gW.ravel(), gb]
    return cost, np.concatenate(parts)


def grad_sce(model: SceModel, X: np.ndarray, T: np.ndarray, lam: float) -> np.ndarray:
    """Gradient in pack() order; the l1 part uses sign(w) with sign(0) = 0."""
    return loss_and_grad(model, X, T, lam)[1]


def objective(X: np.ndarray, T: np.ndarray, lam: float, shape: ModelShape):
    """Closure mapping a packed parameter vector to (cost, gradient)."""
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)

    def f(theta: np.ndarray) -> tuple[float, np.ndarray]:
        return loss_and_grad(unpack(theta, shape), X, T, lam)

    return f


# --- serialisation ---------------------------------------------------------

def save_model(path: str | Path, model: SceModel, hyper: SceHyperparams, extra: dict | None = None) -> None:
    shape = model.shape
    doc = {
        "format": "sce-model",
        "version": 1,
        "n_features": shape.n_features,
        "hidden": list(shape.hidden),
        "hyperparams": hyper.to_dict(),
        "weights": pack(model).tolist(),
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_model(path: str | Path) -> tuple[SceModel, SceHyperparams, dict]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    shape = ModelShape(doc["n_features"], tuple(doc["hidden"]))
    model = unpack(np.asarray(doc["weights"], dtype=float), shape)
    return model, SceHyperparams.from_dict(doc["hyperparams"]), doc
