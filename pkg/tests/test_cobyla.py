import numpy as np
import pytest

from qbnsl import CobylaResult, OptimizerError, minimize_cobyla


def calls_counter(f):
    seen = []

    def wrapped(x):
        seen.append(np.array(x))
        return f(x)

    wrapped.seen = seen
    return wrapped


def test_quadratic_bowl_converges_to_center():
    target = np.array([1.3, -0.4])
    f = lambda x: float(np.sum((x - target) ** 2))
    res = minimize_cobyla(f, np.zeros(2), rhobeg=0.5, rhoend=1e-6, maxfun=200)
    assert res.converged
    assert np.abs(res.x - target).max() < 1e-3
    assert res.fun < 1e-6


def test_booth_function():
    # minimum f(1, 3) = 0
    f = lambda x: (x[0] + 2 * x[1] - 7) ** 2 + (2 * x[0] + x[1] - 5) ** 2
    res = minimize_cobyla(f, np.array([0.0, 0.0]), rhobeg=0.5, rhoend=1e-7, maxfun=400)
    assert res.converged
    assert np.abs(res.x - np.array([1.0, 3.0])).max() < 1e-3


def test_asymmetric_valley():
    # shallow curved valley; checks the linear model keeps making progress
    f = lambda x: (1 - x[0]) ** 2 + 5 * (x[1] - x[0] ** 2) ** 2
    res = minimize_cobyla(f, np.array([-1.0, 1.0]), rhobeg=0.5, rhoend=1e-7, maxfun=2000)
    assert res.fun < 1e-3


def test_higher_dimension_sphere():
    f = lambda x: float(np.sum(x**2))
    res = minimize_cobyla(f, np.full(6, 2.0), rhobeg=0.5, rhoend=1e-6, maxfun=1500)
    assert res.converged
    assert np.abs(res.x).max() < 1e-3


def test_budget_is_respected_and_reported():
    f = calls_counter(lambda x: float(np.sum(x**2)))
    res = minimize_cobyla(f, np.full(4, 3.0), rhobeg=0.5, rhoend=1e-12, maxfun=40)
    assert not res.converged
    assert res.nfev == 40
    assert len(f.seen) == 40
    # the reported optimum is the best point actually evaluated
    best = min(float(np.sum(x**2)) for x in f.seen)
    assert res.fun == pytest.approx(best, abs=0)


def test_result_tracks_best_not_last():
    # an objective that spikes at the end of the search cannot hide the
    # best point seen earlier
    calls = [0]

    def f(x):
        calls[0] += 1
        return float(np.sum(x**2))

    res = minimize_cobyla(f, np.array([2.0, 2.0]), maxfun=100)
    assert isinstance(res, CobylaResult)
    assert res.fun <= f(res.x) + 1e-12


def test_deterministic():
    f = lambda x: float((x[0] - 0.7) ** 2 + np.sin(x[1]) ** 2)
    a = minimize_cobyla(f, np.array([0.0, 1.0]))
    b = minimize_cobyla(f, np.array([0.0, 1.0]))
    assert np.array_equal(a.x, b.x) and a.fun == b.fun and a.nfev == b.nfev


def test_validation():
    f = lambda x: float(np.sum(x**2))
    with pytest.raises(OptimizerError):
        minimize_cobyla(f, np.zeros(2), rhobeg=0.1, rhoend=0.5)
    with pytest.raises(OptimizerError):
        minimize_cobyla(f, np.zeros(2), maxfun=2)
    with pytest.raises(OptimizerError):
        minimize_cobyla(f, np.zeros((2, 2)))


def test_matches_reference_on_smooth_battery():
    """Sanity net: on smooth convex problems the in-repo optimizer should land
    within loose tolerance of scipy's implementation of the same method."""
    from scipy.optimize import minimize

    problems = [
        (lambda x: float(np.sum((x - 1.5) ** 2)), np.zeros(3)),
        (lambda x: (x[0] + 2 * x[1] - 7) ** 2 + (2 * x[0] + x[1] - 5) ** 2,
         np.array([0.0, 0.0])),
        (lambda x: float(np.sum(np.abs(x) ** 1.5)), np.array([2.0, -1.0, 0.5])),
    ]
    for f, x0 in problems:
        mine = minimize_cobyla(f, x0, rhobeg=0.5, rhoend=1e-6, maxfun=1000)
        ref = minimize(
            f, x0, method="COBYLA",
            options={"rhobeg": 0.5, "tol": 1e-6, "maxiter": 1000},
        )
        assert mine.fun <= ref.fun + 1e-4
