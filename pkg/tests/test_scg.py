import numpy as np
import pytest

from sce.scg import ScgConfig, ScgError, minimize


def quadratic(A, b):
    return lambda x: (0.5 * x @ A @ x - b @ x, A @ x - b)


def random_spd(rng, n):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(rng.uniform(0.5, 20.0, n)) @ Q.T


def test_sphere_from_3_4():
    f = lambda x: (0.5 * x @ x, x.copy())
    x, tr = minimize(f, np.array([3.0, 4.0]), ScgConfig(max_iterations=50))
    assert np.linalg.norm(x) <= 1e-6


def test_early_exit_at_stationary_point():
    f = lambda x: (0.5 * x @ x, x.copy())
    x0 = np.array([1e-10, 0.0])
    x, tr = minimize(f, x0)
    assert tr.n_accepted == 0
    np.testing.assert_array_equal(x, x0)


@pytest.mark.parametrize("seed", range(5))
def test_spd_quadratic_linear_solve_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 10
    A, b = random_spd(rng, n), rng.normal(size=n)
    f = quadratic(A, b)
    x, tr = minimize(f, rng.normal(size=n), ScgConfig(max_iterations=10 * n))
    x_star = np.linalg.solve(A, b)
    assert f(x)[0] - f(x_star)[0] <= 1e-8
    costs = tr.accepted_costs()
    assert all(b_ <= a_ for a_, b_ in zip(costs, costs[1:]))


def test_deterministic_trace():
    rng = np.random.default_rng(1)
    A, b = random_spd(rng, 6), rng.normal(size=6)
    r1 = minimize(quadratic(A, b), np.ones(6), ScgConfig(max_iterations=20))
    r2 = minimize(quadratic(A, b), np.ones(6), ScgConfig(max_iterations=20))
    np.testing.assert_array_equal(r1[0], r2[0])
    assert r1[1].costs == r2[1].costs and r1[1].accepted == r2[1].accepted


def test_nonconvex_rosenbrock_monotone():
    def rosen(x):
        f = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
        g = np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])
        return f, g
    x, tr = minimize(rosen, np.array([-1.2, 1.0]), ScgConfig(max_iterations=500))
    costs = tr.accepted_costs()
    assert all(b <= a for a, b in zip(costs, costs[1:]))
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-4)


def test_iterations_count_accepted_steps():
    rng = np.random.default_rng(2)
    A, b = random_spd(rng, 30), rng.normal(size=30)
    _, tr = minimize(quadratic(A, b), np.zeros(30), ScgConfig(max_iterations=7))
    assert tr.n_accepted == 7
    assert tr.stop_reason == "iteration limit"


def test_nonfinite_start_rejected():
    with pytest.raises(ScgError):
        minimize(lambda x: (float("nan"), x), np.ones(2))


def test_nonfinite_mid_run_recovers_or_aborts():
    # cost explodes outside the unit box; the optimiser must back off
    def f(x):
        if np.any(np.abs(x) > 1.5):
            return float("inf"), np.full_like(x, np.nan)
        return float(((x - 1) ** 2).sum()), 2 * (x - 1)
    x, tr = minimize(f, np.array([-1.0, -1.0]), ScgConfig(max_iterations=30, lambda_init=1e-12))
    assert np.isfinite(f(x)[0])
    costs = tr.accepted_costs()
    assert all(b <= a for a, b in zip(costs, costs[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        ScgConfig(max_iterations=0)
    with pytest.raises(ValueError):
        ScgConfig(sigma0=0)
