"""Scaled conjugate gradient minimisation (Moller, 1993).

No line search: a second-order step size comes from a finite-difference
Hessian-vector product along the search direction, and a Levenberg-style
scale ``beta`` is raised or lowered according to how well the local
quadratic model predicted the actual cost change.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

BETA_MIN = 1e-15
BETA_MAX = 1e100
MAX_NONFINITE = 20
MAX_REJECTED = 200


class ScgError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScgConfig:
    max_iterations: int = 100
    sigma0: float = 1e-4
    lambda_init: float = 1e-6
    tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.sigma0, self.lambda_init, self.tolerance) <= 0:
            raise ValueError("sigma0, lambda_init and tolerance must be positive")


@dataclass
class ScgTrace:
    costs: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    accepted: list[bool] = field(default_factory=list)
    initial_cost: float = float("nan")
    stop_reason: str = ""
    aborted: bool = False

    @property
    def n_accepted(self) -> int:
        return sum(self.accepted)

    def accepted_costs(self) -> list[float]:
        return [self.initial_cost] + [c for c, a in zip(self.costs, self.accepted) if a]

    def summary(self) -> dict:
        acc = self.accepted_costs()
        return {
            "initial_cost": self.initial_cost,
            "final_cost": acc[-1],
            "accepted_steps": self.n_accepted,
            "attempted_steps": len(self.accepted),
            "stop_reason": self.stop_reason,
            "aborted": self.aborted,
        }


def _finite(f, g) -> bool:
    return bool(np.isfinite(f) and np.all(np.isfinite(g)))


def minimize(objective: Objective, theta0: np.ndarray,
             config: ScgConfig = ScgConfig()) -> tuple[np.ndarray, ScgTrace]:
    """Minimise ``objective`` starting at ``theta0``.

    ``objective`` returns ``(cost, gradient)``.  Iterations are counted as
    accepted steps.  The direction is reset to steepest descent after
    every ``len(theta0)`` accepted steps.  Returns the best iterate, which
    for this algorithm is always the last accepted one.
    """
    x = np.array(theta0, dtype=float)
    n = x.size
    f_old, g_new = objective(x)
    if not _finite(f_old, g_new):
        raise ScgError("objective is not finite at the starting point")
    trace = ScgTrace(initial_cost=float(f_old))

    g_old = g_new
    d = -g_new
    beta = config.lambda_init
    success = True
    n_success = 0
    nonfinite = 0
    rejected = 0
    mu = kappa = theta = 0.0

    if np.linalg.norm(g_new) < config.tolerance:
        trace.stop_reason = "gradient below tolerance"
        return x, trace

    while trace.n_accepted < config.max_iterations:
        if success:
            mu = float(d @ g_new)
            if mu >= 0:
                d = -g_new
                mu = float(d @ g_new)
            kappa = float(d @ d)
            if kappa < np.finfo(float).eps:
                # conjugate update cancelled out; fall back to steepest descent
                d = -g_new
                mu = float(d @ g_new)
                kappa = float(d @ d)
                n_success = 0
                if kappa < np.finfo(float).eps:
                    trace.stop_reason = "search direction vanished"
                    break
            sigma = config.sigma0 / np.sqrt(kappa)
            _, g_plus = objective(x + sigma * d)
            theta = float(d @ (g_plus - g_new)) / sigma

        delta = theta + beta * kappa
        if delta <= 0:
            # make the curvature estimate positive definite
            delta = beta * kappa
            beta = beta - theta / kappa
        alpha = -mu / delta
        x_new = x + alpha * d
        f_new, g_try = objective(x_new)

        if not _finite(f_new, g_try) or not np.isfinite(theta):
            nonfinite += 1
            trace.costs.append(float("nan"))
            trace.grad_norms.append(float("nan"))
            trace.accepted.append(False)
            if nonfinite >= MAX_NONFINITE:
                trace.stop_reason = "non-finite values"
                trace.aborted = True
                log.warning("SCG aborted after %d consecutive non-finite evaluations", nonfinite)
                break
            beta = min(4.0 * beta, BETA_MAX)
            if not np.isfinite(theta):
                theta = 0.0
            success = False
            continue
        nonfinite = 0

        comparison = 2.0 * (f_new - f_old) / (alpha * mu)
        success = comparison >= 0
        if success:
            x = x_new
            f_old = f_new
            g_old, g_new = g_new, g_try
            n_success += 1
            rejected = 0
        else:
            rejected += 1
        gnorm = float(np.linalg.norm(g_new))
        trace.costs.append(float(f_new) if success else float(f_old))
        trace.grad_norms.append(gnorm)
        trace.accepted.append(bool(success))

        if success and gnorm < config.tolerance:
            trace.stop_reason = "gradient below tolerance"
            break
        if rejected >= MAX_REJECTED:
            trace.stop_reason = "too many rejected steps"
            trace.aborted = True
            break

        if comparison < 0.25:
            beta = min(4.0 * beta, BETA_MAX)
        if comparison > 0.75:
            beta = max(0.5 * beta, BETA_MIN)

        if n_success == n:
            d = -g_new
            n_success = 0
        elif success:
            gamma = float((g_old - g_new) @ g_new) / mu
            d = gamma * d - g_new
    else:
        trace.stop_reason = "iteration limit"

    return x, trace
