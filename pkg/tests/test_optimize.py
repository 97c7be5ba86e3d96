import warnings

import numpy as np
import pytest
from scipy import special

from heavytail import optimize as opt
from heavytail.confregion import ScoreModel, StudySummary1D, SubStudy, score_1d
from heavytail.errors import BracketError, ConvergenceWarning
from heavytail.nulldist import get_null

Z975 = special.ndtri(0.975)


# --- brent_root -----------------------------------------------------------

def test_root_sqrt2():
    assert opt.brent_root(lambda x: x * x - 2, 0, 2, tol=1e-12) == pytest.approx(np.sqrt(2), abs=1e-10)


def test_root_cos():
    assert opt.brent_root(np.cos, 1, 2) == pytest.approx(np.pi / 2, abs=1e-10)


def test_root_threshold():
    nd = get_null("hc", [0.5, 0.5])
    x = opt.brent_root(lambda t: nd.cdf(t) - 0.95, 1, 100, tol=1e-8)
    assert x == pytest.approx(13.69, abs=0.01)


def test_root_no_sign_change():
    with pytest.raises(BracketError):
        opt.brent_root(lambda x: x * x + 1, -1, 1)


def test_root_endpoint_exact():
    assert opt.brent_root(lambda x: x - 1, 1, 3) == 1.0


@pytest.mark.parametrize("c", [-0.7, 0.1, 0.9])
def test_root_straddles(c):
    f = lambda x: np.tanh(5 * (x - c))
    r = opt.brent_root(f, -1, 1, tol=1e-12)
    assert f(r - 1e-10) <= 0 <= f(r + 1e-10)


# --- brent_min ------------------------------------------------------------

def test_min_quadratic():
    x, fx = opt.brent_min(lambda x: (x - 3) ** 2, (0, 10))
    assert x == pytest.approx(3, abs=1e-8)
    assert fx == pytest.approx(0, abs=1e-14)


def test_min_flat():
    x, fx = opt.brent_min(lambda x: abs(x - 1) + abs(x + 1), (-5, 5))
    assert fx == pytest.approx(2, abs=1e-10)
    assert -1 - 1e-8 <= x <= 1 + 1e-8


def test_min_two_study_score():
    studies = [StudySummary1D(0.125, 0.1), StudySummary1D(-0.125, 0.1)]
    x, _ = opt.brent_min(lambda t: score_1d(t, studies), (-1, 1), tol=1e-10)
    assert x == pytest.approx(0, abs=1e-6)


def test_min_nonfinite():
    with pytest.raises(FloatingPointError):
        opt.brent_min(lambda x: np.nan, (0, 1))


# --- minimize_df ----------------------------------------------------------

def test_simplex_quadratic():
    x, fx = opt.minimize_df(lambda x: np.sum((x - [1, 2]) ** 2), [0, 0], tol=1e-8)
    assert np.allclose(x, [1, 2], atol=1e-5)


def test_simplex_l1():
    _, fx = opt.minimize_df(lambda x: np.sum(np.abs(x)), [1, -1, 1], tol=1e-7)
    assert fx <= 1e-4


def test_simplex_symmetric_score():
    # three unit-covariance studies at the vertices of an equilateral triangle
    ang = np.pi / 2 + 2 * np.pi * np.arange(3) / 3
    centers = 0.3 * np.c_[np.cos(ang), np.sin(ang)] + [0.5, -0.2]
    subs = [SubStudy(c, 0.04 * np.eye(2), df=30) for c in centers]
    model = ScoreModel(subs, "hcct", None)
    x, _ = opt.minimize_df(model, [0.0, 0.0], tol=1e-8)
    assert np.allclose(x, centers.mean(axis=0), atol=1e-4)


def test_simplex_convergence_warning():
    with pytest.warns(ConvergenceWarning):
        r = opt.minimize_df(lambda x: np.sum((x - 100) ** 2), np.zeros(4), tol=1e-12, max_iter=5)
    assert not r.converged


def test_simplex_infinite_start():
    with pytest.raises(ValueError):
        opt.minimize_df(lambda x: np.inf, [0.0])


# --- penalty_extreme ------------------------------------------------------

def _ball(x):
    return float(np.linalg.norm(x))


@pytest.mark.parametrize("b", [[1.0, 0.0], [1 / np.sqrt(2), 1 / np.sqrt(2)], [0.0, -2.0]])
def test_penalty_unit_ball(b):
    hi = opt.penalty_extreme("max", b, _ball, 1.0, x0=np.zeros(2))
    lo = opt.penalty_extreme("min", b, _ball, 1.0, x0=np.zeros(2))
    n = np.linalg.norm(b)
    assert hi == pytest.approx(n, abs=1e-3)
    assert lo == pytest.approx(-n, abs=1e-3)


def test_penalty_single_study_interval():
    s = StudySummary1D(0.4, 0.2)
    model = ScoreModel([s], "hcct", None)
    thr = model.threshold(0.95)
    hi = opt.penalty_extreme("max", [1.0], model, thr, x0=[0.4], scale=0.2)
    lo = opt.penalty_extreme("min", [1.0], model, thr, x0=[0.4], scale=0.2)
    assert hi == pytest.approx(0.4 + Z975 * 0.2, abs=1e-4)
    assert lo == pytest.approx(0.4 - Z975 * 0.2, abs=1e-4)


def test_penalty_point_feasible_and_bounds_start():
    rng = np.random.default_rng(8)
    subs = [SubStudy(rng.normal(size=3) * 0.1, 0.02 * np.eye(3), df=20) for _ in range(4)]
    model = ScoreModel(subs, "hcct", None)
    thr = model.threshold(0.95)
    x0, _ = opt.minimize_df(model, np.zeros(3), tol=1e-8)
    for _ in range(3):
        b = rng.normal(size=3)
        val, pt = opt.penalty_extreme("max", b, model, thr, x0=x0, scale=0.2, return_point=True)
        assert model(pt) <= thr + 1e-6 * abs(thr)
        assert val >= b @ x0 - 1e-9


def test_penalty_lambda_invariance():
    subs = [SubStudy([0.1, -0.2], [[0.04, 0.01], [0.01, 0.03]], df=15),
            SubStudy([0.15, -0.1], [[0.05, 0.0], [0.0, 0.05]], df=25)]
    model = ScoreModel(subs, "hcct", None)
    thr = model.threshold(0.9)
    x0, _ = opt.minimize_df(model, np.zeros(2), tol=1e-8)
    b = np.array([1.0, 2.0])
    vals = [opt.penalty_extreme("max", b, model, thr, lam=np.exp(k), x0=x0, scale=0.2)
            for k in (15, 20, 25)]
    assert max(vals) - min(vals) <= 1e-3 * abs(vals[1])


def test_penalty_infeasible_start():
    with pytest.raises(ValueError):
        opt.penalty_extreme("max", [1.0, 0.0], _ball, 1.0, x0=np.array([2.0, 0.0]))


def test_penalty_bad_direction():
    with pytest.raises(ValueError):
        opt.penalty_extreme("sideways", [1.0, 0.0], _ball, 1.0, x0=np.zeros(2))


def test_boundary_distance():
    assert opt.boundary_distance(_ball, 1.0, np.zeros(2), np.array([0.6, 0.8]), 0.1) == pytest.approx(1.0, abs=1e-12)
    assert opt.boundary_distance(lambda x: 0.0, 1.0, np.zeros(2), np.array([1.0, 0.0]), 1.0) == np.inf
