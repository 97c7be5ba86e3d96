import numpy as np
import pytest
from scipy import ndimage, special, stats

from heavytail import sim, specfun
from heavytail.confregion import (IntervalResult, ScoreModel, StudySummary1D, SubStudy,
                                  adaptive_nonempty, build_region, cct_invert_grid,
                                  contour_2d, heterogeneity_scores, invert_1d,
                                  lower_bound_stat, score_1d, score_md,
                                  simultaneous_ci, slice_region)
from heavytail.errors import DomainError, SpanError, StateError

Z975 = special.ndtri(0.975)
EX1 = [StudySummary1D(0.125, 0.1), StudySummary1D(-0.125, 0.1)]
EX2 = [SubStudy(c, 0.01 * np.eye(2)) for c in [(-0.10, -0.10), (0.21, 0.0), (0.0, 0.21)]]


def _polygon_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _is_convex(v):
    e = np.diff(np.vstack([v, v[:1]]), axis=0)
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    tol = 1e-12 * np.abs(cross).max()
    return np.all(cross >= -tol) or np.all(cross <= tol)


# --- data types -----------------------------------------------------------

@pytest.mark.parametrize("args", [(np.nan, 1.0), (0.0, 0.0), (0.0, 1.0, -1.0)])
def test_study_validation(args):
    with pytest.raises(DomainError):
        StudySummary1D(*args)


def test_substudy_validation():
    with pytest.raises(DomainError):
        SubStudy([0, 0], [[1, 2], [2, 1]])          # not SPD
    with pytest.raises(DomainError):
        SubStudy([0, 0], [[1, 0.5], [0.4, 1]])      # not symmetric
    with pytest.raises(DomainError):
        SubStudy([0, 0], np.eye(2), P=[[1, 1, 0], [2, 2, 0]])
    with pytest.raises(DomainError):
        SubStudy([0, 0, 0], np.eye(3), df=2)
    assert not SubStudy([0, 0], np.eye(2), df=2).convex
    assert SubStudy([0, 0], np.eye(2), df=3).convex


# --- score_1d -------------------------------------------------------------

def test_score_at_estimate_is_support_min():
    s = [StudySummary1D(0.3, 0.2)]
    assert score_1d(0.3, s, "hcct") == pytest.approx(0.0, abs=1e-15)
    assert score_1d(0.3, s, "ehmp") == pytest.approx(1.0, abs=1e-15)


def test_score_at_classical_endpoint():
    s = [StudySummary1D(0.3, 0.2)]
    hc95 = specfun.dist_quantile(specfun.DistKind.half_cauchy(), 0.95)
    assert score_1d(0.3 + Z975 * 0.2, s) == pytest.approx(hc95, rel=1e-9)
    assert hc95 == pytest.approx(12.71, abs=0.01)


def test_score_student_t():
    s = [StudySummary1D(1.0, 0.5, df=7), StudySummary1D(0.2, 0.3, df=12)]
    theta = 0.4
    p = [2 * stats.t.sf(abs(x.theta_hat - theta) / x.sigma_hat, x.df) for x in s]
    ref = np.mean(1 / np.tan(np.pi * np.array(p) / 2))
    assert score_1d(theta, s) == pytest.approx(ref, rel=1e-10)


def test_score_lower_bound_ex1():
    assert lower_bound_stat(EX1) == pytest.approx(1.25, abs=1e-14)
    assert score_1d(0.0, EX1) >= 1.25


def test_score_1d_rejects_cct():
    with pytest.raises(DomainError):
        score_1d(0.0, EX1, "cct")


def test_score_vectorized():
    t = np.linspace(-1, 1, 7)
    assert np.allclose(score_1d(t, EX1), [score_1d(x, EX1) for x in t], rtol=1e-14)


# --- invert_1d ------------------------------------------------------------

@pytest.mark.parametrize("df", [np.inf])
def test_single_study_classical(df):
    ci = invert_1d([StudySummary1D(0.3, 0.2, df)], "hcct")
    assert ci.lo == pytest.approx(0.3 - Z975 * 0.2, abs=1e-6)
    assert ci.hi == pytest.approx(0.3 + Z975 * 0.2, abs=1e-6)


def test_single_study_student():
    ci = invert_1d([StudySummary1D(0.3, 0.2, 9)], "ehmp")
    q = stats.t.ppf(0.975, 9)
    assert ci.lo == pytest.approx(0.3 - q * 0.2, abs=1e-6)
    assert ci.hi == pytest.approx(0.3 + q * 0.2, abs=1e-6)


def test_ex1_hcct_single_symmetric_interval():
    ci = invert_1d(EX1, "hcct")
    assert ci.status == "interval"
    assert ci.lo == pytest.approx(-ci.hi, abs=1e-8)
    # dense grid-scan oracle at spacing 1e-5
    grid = np.arange(-0.6, 0.6, 1e-5)
    inside = grid[score_1d(grid, EX1) <= ScoreModel(EX1, "hcct", None).threshold(0.95)]
    assert ci.lo == pytest.approx(inside.min(), abs=2e-5)
    assert ci.hi == pytest.approx(inside.max(), abs=2e-5)
    assert np.all(np.diff(inside) < 2e-5)


def test_inconsistent_studies_empty():
    s = [StudySummary1D(5.0, 0.01), StudySummary1D(-5.0, 0.01)]
    assert lower_bound_stat(s) == pytest.approx(500.0)
    assert invert_1d(s).is_empty
    assert invert_1d(s).width == 0.0


def test_endpoints_on_threshold():
    rng = np.random.default_rng(2)
    s = [StudySummary1D(rng.normal(), rng.uniform(0.5, 1.5), df) for df in (5, 10, np.inf, 30)]
    ci = invert_1d(s, "hcct", [0.1, 0.2, 0.3, 0.4])
    thr = ScoreModel(s, "hcct", [0.1, 0.2, 0.3, 0.4]).threshold(0.95)
    for e in (ci.lo, ci.hi):
        assert abs(score_1d(e, s, "hcct", [0.1, 0.2, 0.3, 0.4]) - thr) <= 1e-6 * thr


@pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
def test_scale_equivariance(c):
    s = [StudySummary1D(0.2, 0.1), StudySummary1D(-0.05, 0.3), StudySummary1D(0.1, 0.2, 8)]
    a = invert_1d(s)
    b = invert_1d([StudySummary1D(c * x.theta_hat, c * x.sigma_hat, x.df) for x in s])
    assert b.lo == pytest.approx(c * a.lo, rel=1e-9)
    assert b.hi == pytest.approx(c * a.hi, rel=1e-9)


def test_interval_result():
    r = IntervalResult.interval(1, 2)
    assert 1.5 in r and 3 not in r
    assert 0 not in IntervalResult.empty()


def test_coverage_at_independence():
    res = sim.experiment_coverage_1d(sim.CorrSpec.identity(20), level=0.95, reps=2000, seed=7)
    assert 0.935 <= res.coverage <= 0.965


# --- CCT grid -------------------------------------------------------------

def test_cct_ex1_three_components():
    comps = cct_invert_grid(EX1, level=0.95)
    ref = [(-0.1277, -0.1212), (-0.1038, 0.1038), (0.1212, 0.1277)]
    assert len(comps) == 3
    for (a, b), (ra, rb) in zip(comps, ref):
        assert a == pytest.approx(ra, abs=5e-4)
        assert b == pytest.approx(rb, abs=5e-4)
    for s in EX1:
        assert any(a <= s.theta_hat <= b for a, b in comps)


def test_cct_single_study():
    comps = cct_invert_grid([StudySummary1D(0.0, 1.0)], n=20001)
    assert len(comps) == 1
    assert comps[0][0] == pytest.approx(-Z975, abs=1e-6)
    assert comps[0][1] == pytest.approx(Z975, abs=1e-6)


def test_cct_grid_too_small():
    with pytest.raises(DomainError):
        cct_invert_grid(EX1, n=10)


# --- score_md -------------------------------------------------------------

def test_score_md_identity_at_center():
    s = SubStudy([0.1, 0.2], [[1, 0.2], [0.2, 2]], df=12)
    assert score_md([0.1, 0.2], [s]) == pytest.approx(0.0, abs=1e-14)


def test_score_md_reduces_to_1d():
    s1 = [StudySummary1D(0.2, 0.1, 8), StudySummary1D(-0.1, 0.3), StudySummary1D(0.05, 0.2, 20)]
    subs = [SubStudy.from_1d(s) for s in s1]
    for t in (-0.3, 0.0, 0.17):
        assert score_md([t], subs, "ehmp") == pytest.approx(score_1d(t, s1, "ehmp"), rel=1e-10)


def _straight_line_score(theta, subs, w):
    # independent path: explicit inverse, scipy F distribution
    out = 0.0
    for s, wj in zip(subs, w):
        r = s.xi_hat - s.P @ theta
        q = r @ np.linalg.inv(s.sigma_hat) @ r
        dj, k = s.dj, s.df
        if np.isinf(k):
            p = stats.chi2.sf(q, dj)
        else:
            p = stats.f.sf(q * (k - dj + 1) / (dj * k), dj, k - dj + 1)
        out += wj / np.tan(np.pi * p / 2)
    return out


def test_score_md_dual_implementation():
    rng = np.random.default_rng(12)
    subs = []
    for df in (6, 15, np.inf):
        A = rng.normal(size=(2, 2))
        subs.append(SubStudy(rng.normal(size=2), A @ A.T + 0.5 * np.eye(2), P=rng.normal(size=(2, 2)), df=df))
    w = np.array([0.5, 0.3, 0.2])
    for _ in range(5):
        th = rng.normal(size=2) * 0.3
        assert score_md(th, subs, "hcct", w) == pytest.approx(_straight_line_score(th, subs, w), rel=1e-9)


def test_score_md_dimension_mismatch():
    with pytest.raises(DomainError):
        score_md([0.0, 1.0, 2.0], EX2)


# --- regions ---------------------------------------------------------------

def test_single_substudy_region_is_ellipsoid():
    S = np.array([[0.04, 0.01], [0.01, 0.02]])
    s = SubStudy([0.3, -0.1], S, df=25)
    r = build_region([s])
    assert np.allclose(r.point_estimate, [0.3, -0.1], atol=1e-6)
    assert r.contains([0.3, -0.1])
    k, d = 25, 2
    q = d * k / (k - d + 1) * stats.f.ppf(0.95, d, k - d + 1)
    for i in range(2):
        ci = simultaneous_ci(r, np.eye(2)[i])
        half = np.sqrt(q * S[i, i])
        assert ci.lo == pytest.approx(0.3 * (i == 0) - 0.1 * (i == 1) - half, abs=1e-5)
        assert ci.hi == pytest.approx(0.3 * (i == 0) - 0.1 * (i == 1) + half, abs=1e-5)


def test_region_far_point_and_contour_on_boundary():
    r = build_region(EX2, "hcct")
    assert not r.is_empty
    assert not r.contains(1e6 * np.ones(2))
    v = contour_2d(r, 64)
    for p in v:
        assert abs(r.score(p) - r.threshold) <= 1e-6 * r.threshold


def test_ex2_hcct_convex_cct_disconnected():
    r = build_region(EX2, "hcct")
    assert _is_convex(contour_2d(r))
    cct = ScoreModel(EX2, "cct", None)
    g = np.linspace(-0.6, 0.6, 601)
    X, Y = np.meshgrid(g, g)
    inside = cct.batch(np.c_[X.ravel(), Y.ravel()]).reshape(X.shape) <= cct.threshold(0.95)
    assert ndimage.label(inside)[1] >= 2
    hc = r.model.batch(np.c_[X.ravel(), Y.ravel()]).reshape(X.shape) <= r.threshold
    assert ndimage.label(hc)[1] == 1


def test_contour_circle_equidistant():
    r = build_region([SubStudy([1.0, 2.0], 0.3 * np.eye(2), df=40)])
    v = contour_2d(r, 32)
    rad = np.linalg.norm(v - [1.0, 2.0], axis=1)
    assert np.ptp(rad) <= 1e-5 * rad.mean()


def test_contour_area_converges():
    r = build_region(EX2, "hcct")
    a1 = _polygon_area(contour_2d(r, 256))
    a2 = _polygon_area(contour_2d(r, 512))
    assert abs(a2 - a1) <= 5e-3 * a2


def test_contour_errors():
    with pytest.raises(DomainError):
        contour_2d(build_region(EX2), 4)
    far = [SubStudy([0, 0], 1e-4 * np.eye(2)), SubStudy([5, 5], 1e-4 * np.eye(2))]
    empty = build_region(far)
    assert empty.is_empty
    with pytest.raises(StateError):
        contour_2d(empty)
    unb = build_region([SubStudy([0.0], [[1.0]], P=[[1.0, 0.0]], df=10)])
    assert not unb.bounded
    with pytest.raises(StateError):
        simultaneous_ci(unb, [1.0, 0.0])


def test_slice_without_fixed_matches_contour():
    r = build_region(EX2)
    assert np.allclose(slice_region(r, {}, [0, 1]), contour_2d(r, 256), atol=1e-9)


def test_slice_through_estimate_nonempty():
    rng = np.random.default_rng(4)
    subs = [SubStudy(rng.normal(size=3) * 0.05, 0.01 * np.eye(3), df=30) for _ in range(3)]
    r = build_region(subs)
    fx = {0: r.point_estimate[0]}
    assert len(slice_region(r, fx, [1, 2])) > 0
    assert not slice_region(r, {0: r.point_estimate[0], 1: r.point_estimate[1]}, [2]).is_empty


def test_slice_ball_radius():
    r = build_region([SubStudy([0.0, 0.0, 0.0], np.eye(3))])
    ci = slice_region(r, {0: 0.0, 1: 0.0}, [2])
    proj = simultaneous_ci(r, [0.0, 0.0, 1.0])
    assert ci.hi == pytest.approx(proj.hi, abs=1e-4)
    assert ci.lo == pytest.approx(proj.lo, abs=1e-4)
    assert ci.hi == pytest.approx(np.sqrt(stats.chi2.ppf(0.95, 3)), abs=1e-6)


def test_slice_bad_partition():
    with pytest.raises(DomainError):
        slice_region(build_region(EX2), {0: 0.0}, [0])


def test_simci_homogeneous():
    r = build_region(EX2)
    b = np.array([1.0, -0.5])
    a, c = simultaneous_ci(r, b), simultaneous_ci(r, 2 * b)
    assert c.lo / 2 == pytest.approx(a.lo, abs=1e-6)
    assert c.hi / 2 == pytest.approx(a.hi, abs=1e-6)


def test_simci_matches_invert_1d():
    r = build_region([SubStudy.from_1d(s) for s in EX1])
    ci, ref = simultaneous_ci(r, [1.0]), invert_1d(EX1)
    assert ci.lo == pytest.approx(ref.lo, abs=1e-4)
    assert ci.hi == pytest.approx(ref.hi, abs=1e-4)


def test_simci_errors():
    r = build_region(EX2)
    with pytest.raises(DomainError):
        simultaneous_ci(r, [0.0, 0.0])
    with pytest.raises(DomainError):
        simultaneous_ci(r, [1.0])


def test_nesting():
    r95 = build_region(EX2, level=0.95)
    r99 = build_region(EX2, level=0.99)
    rng = np.random.default_rng(0)
    ang = rng.uniform(0, 2 * np.pi, 50)
    from heavytail.optimize import boundary_distance
    for a in ang:
        u = np.array([np.cos(a), np.sin(a)])
        d = boundary_distance(r95.model, r95.threshold, r95.point_estimate, u, 0.1)
        assert r99.contains(r95.point_estimate + d * u)


def _random_fixture(rng, d):
    m = rng.integers(2, 5)
    subs = []
    for _ in range(m):
        dj = rng.integers(1, d + 1)
        A = rng.normal(size=(dj, dj))
        S = A @ A.T + 0.3 * np.eye(dj)
        df = np.inf if rng.random() < 0.3 else float(rng.integers(dj + 1, 40))
        subs.append(SubStudy(rng.normal(size=dj), S, P=rng.normal(size=(dj, d)), df=df))
    return subs, rng.dirichlet(np.ones(m))


@pytest.mark.parametrize("kind", ["hcct", "ehmp"])
def test_convexity_along_lines(kind):
    rng = np.random.default_rng(99)
    for _ in range(100):
        d = int(rng.integers(1, 4))
        subs, w = _random_fixture(rng, d)
        model = ScoreModel(subs, kind, w)
        c = model.gls()
        for _ in range(20):
            u = rng.normal(size=d)
            t = np.linspace(-2, 2, 41)
            vals = model.batch(c + t[:, None] * u)
            ok = np.isfinite(vals) & (vals < 1e12)
            v = vals[ok]
            if v.size < 3:
                continue
            scale = max(1.0, np.abs(v).max())
            assert np.all(v[:-2] - 2 * v[1:-1] + v[2:] >= -1e-7 * scale)


# --- empty regions ---------------------------------------------------------

def test_lower_bound_trivial():
    assert lower_bound_stat([StudySummary1D(0.3, s) for s in (0.1, 0.2, 0.5)]) == 0.0


def test_lower_bound_below_min_score():
    rng = np.random.default_rng(31)
    from heavytail.optimize import brent_min
    for _ in range(50):
        m = rng.integers(2, 6)
        s = [StudySummary1D(rng.normal(), rng.uniform(0.05, 1.0)) for _ in range(m)]
        w = rng.dirichlet(np.ones(m))
        th = [x.theta_hat for x in s]
        _, fmin = brent_min(lambda t: score_1d(t, s, "hcct", w), (min(th), max(th)), tol=1e-12)
        assert lower_bound_stat(s, w) <= fmin + 1e-9


def test_heterogeneity_scores():
    s = [StudySummary1D(0.1, 0.1), StudySummary1D(0.4, 0.2), StudySummary1D(-0.2, 0.5)]
    q = heterogeneity_scores(s, [0.2])
    assert np.allclose(q, [1.0, 1.0, 0.64], rtol=1e-12)
    assert np.allclose(heterogeneity_scores(s[:1], [0.1]), 0.0)


def test_heterogeneity_finds_outlier():
    s = [StudySummary1D(v, 0.1) for v in (0.0, 0.05, -0.05, 1.0, 0.02)]
    fit = np.median([x.theta_hat for x in s])
    assert int(np.argmax(heterogeneity_scores(s, [fit]))) == 3


def test_adaptive_consistent_no_drops():
    s = [StudySummary1D(v, 0.1) for v in (0.0, 0.05, -0.05)]
    region, dropped = adaptive_nonempty(s)
    ref = build_region(s)
    assert dropped == []
    assert region.point_estimate == pytest.approx(ref.point_estimate)


def test_adaptive_drops_outlier():
    s = [StudySummary1D(v, 0.1) for v in (0.0, 0.05, -0.05, 0.02, 5.0)]
    assert build_region(s).is_empty
    region, dropped = adaptive_nonempty(s)
    assert dropped == [4]
    assert not region.is_empty
    assert region.weights[4] == 0
    assert region.weights.sum() == pytest.approx(1.0)


def test_adaptive_span_error():
    # the only study that identifies the second coordinate is also the outlier
    x = SubStudy([5.0, 5.0], 1e-4 * np.eye(2))
    y = SubStudy([0.0], [[1e-4]], P=[[1.0, 0.0]])
    z = SubStudy([0.01], [[1e-4]], P=[[1.0, 0.0]])
    with pytest.raises(SpanError) as e:
        adaptive_nonempty([x, y, z])
    assert e.value.dropped == [0]
    region, dropped = adaptive_nonempty([x, y, z], require_span=False)
    assert dropped == [0] and not region.bounded


def test_adaptive_drops_overflowing_outlier():
    # 100 standard errors away: every p-value underflows and the score is inf everywhere
    s = [StudySummary1D(v, 0.1) for v in (0.0, 0.05, 10.0)]
    r = build_region(s)
    assert r.is_empty
    assert r.argmin[0] == pytest.approx(np.mean([0.0, 0.05, 10.0]))
    region, dropped = adaptive_nonempty(s)
    assert dropped == [2]
    assert not region.is_empty
