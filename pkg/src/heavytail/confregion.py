"""
Confidence intervals and regions by inverting combination tests.

A parameter value ``theta`` belongs to the level-``1-alpha`` region when the
combination score

    T(theta) = sum_j w_j F^{-1}(1 - p_j(theta))

does not exceed the null quantile ``F_w^{-1}(1-alpha)``.  Each ``p_j`` is the
p-value of a Hotelling (finite df) or chi-square (known covariance) test of
``P_j theta = xi_j`` in study ``j``.  For the Half-Cauchy and Pareto(1,1)
scores the region is convex whenever every ``df >= d_j + 1``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import linalg, special

from . import specfun
from .combine import cauchy_score, hc_score, pareto_score
from .errors import DomainError, SpanError, StateError
from .nulldist import Weights, get_null
from .optimize import (boundary_distance, brent_min, brent_root, minimize_df,
                       penalty_extreme)

_SCORE_CAP = 1e300


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StudySummary1D:
    """Scalar estimate, its standard error and degrees of freedom (inf = normal)."""
    theta_hat: float
    sigma_hat: float
    df: float = np.inf

    def __post_init__(self):
        if not np.isfinite(self.theta_hat):
            raise DomainError("theta_hat must be finite")
        if not self.sigma_hat > 0:
            raise DomainError("sigma_hat must be positive")
        if not self.df > 0:
            raise DomainError("df must be positive")


class SubStudy:
    """
    Projected multivariate summary: ``xi_hat`` estimates ``P theta``.

    Parameters
    ----------
    xi_hat : array_like, shape (d_j,)
    sigma_hat : array_like, shape (d_j, d_j)
        Covariance of ``xi_hat`` (SPD).
    P : array_like, shape (d_j, d), optional
        Full-row-rank projection; identity by default.
    df : float
        Degrees of freedom of the Hotelling reference, ``inf`` for chi-square.
    """

    def __init__(self, xi_hat, sigma_hat, P=None, df=np.inf):
        xi = np.atleast_1d(np.asarray(xi_hat, dtype=float)).ravel()
        dj = xi.size
        S = np.asarray(sigma_hat, dtype=float)
        if S.ndim < 2:
            S = np.atleast_1d(S).reshape(1, 1) if S.size == 1 else np.diag(S)
        if S.shape != (dj, dj):
            raise DomainError(f"sigma_hat must be {dj}x{dj}")
        if not np.allclose(S, S.T, rtol=1e-10, atol=1e-14 * np.abs(S).max()):
            raise DomainError("sigma_hat must be symmetric")
        try:
            self.chol = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise DomainError("sigma_hat is not positive definite")
        if P is None:
            P = np.eye(dj)
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if P.shape[0] != dj:
            raise DomainError(f"P must have {dj} rows")
        if np.linalg.matrix_rank(P) != dj:
            raise DomainError("P must have full row rank")
        df = float(df)
        if not df > 0:
            raise DomainError("df must be positive")
        if np.isfinite(df) and df < dj:
            raise DomainError("finite df must be at least d_j")
        self.xi_hat = xi
        self.sigma_hat = S
        self.P = P
        self.df = df
        self.convex = bool(np.isinf(df) or df >= dj + 1)

    @property
    def dj(self):
        return self.xi_hat.size

    @property
    def d(self):
        return self.P.shape[1]

    @classmethod
    def from_1d(cls, s):
        return cls([s.theta_hat], [[s.sigma_hat ** 2]], [[1.0]], s.df)

    def __repr__(self):
        return f"SubStudy(d_j={self.dj}, d={self.d}, df={self.df})"


@dataclass(frozen=True)
class IntervalResult:
    """Either an empty set or a closed interval ``[lo, hi]``."""
    status: str
    lo: float = np.nan
    hi: float = np.nan

    @classmethod
    def empty(cls):
        return cls("empty")

    @classmethod
    def interval(cls, lo, hi):
        return cls("interval", float(lo), float(hi))

    @property
    def is_empty(self):
        return self.status == "empty"

    @property
    def width(self):
        return 0.0 if self.is_empty else self.hi - self.lo

    def __contains__(self, x):
        return (not self.is_empty) and self.lo <= x <= self.hi


# --------------------------------------------------------------------------
# score evaluation
# --------------------------------------------------------------------------

def _as_substudies(items):
    out = []
    for s in items:
        if isinstance(s, SubStudy):
            out.append(s)
        elif isinstance(s, StudySummary1D):
            out.append(SubStudy.from_1d(s))
        else:
            raise DomainError(f"expected StudySummary1D or SubStudy, got {type(s).__name__}")
    if not out:
        raise DomainError("need at least one study")
    return out


def _score_kind(kind):
    k = str(kind).lower()
    if k not in ("hcct", "ehmp", "cct"):
        raise DomainError(f"score combiner must be hcct or ehmp, got {kind!r}")
    return k


class ScoreModel:
    """
    Vectorized combination score over a set of sub-studies.

    Each study is whitened once (``L_j^{-1} P_j``, ``L_j^{-1} xi_j``) so the
    Hotelling quadratic forms for many ``theta`` reduce to one matrix
    product and a segmented sum.
    """

    def __init__(self, substudies, kind, w):
        subs = _as_substudies(substudies)
        self.kind = _score_kind(kind)
        w = Weights.coerce(w, len(subs)).values
        if w.size != len(subs):
            raise DomainError(f"{len(subs)} studies but {w.size} weights")
        d = subs[0].d
        if any(s.d != d for s in subs):
            raise DomainError("all projections must have the same number of columns")
        self.d = d
        self.all_substudies = subs
        self.all_weights = w
        keep = np.flatnonzero(w > 0)
        self.index = keep
        self.subs = [subs[i] for i in keep]
        self.w = w[keep]
        A, b = [], []
        for s in self.subs:
            A.append(linalg.solve_triangular(s.chol, s.P, lower=True))
            b.append(linalg.solve_triangular(s.chol, s.xi_hat, lower=True))
        self.A = np.vstack(A)
        self.b = np.concatenate(b)
        self.dj = np.array([s.dj for s in self.subs], dtype=float)
        self.df = np.array([s.df for s in self.subs], dtype=float)
        self.starts = np.concatenate([[0], np.cumsum(self.dj[:-1])]).astype(int)
        self.finite = np.isfinite(self.df)
        self.transform = {"hcct": hc_score, "ehmp": pareto_score, "cct": cauchy_score}[self.kind]
        self.convex = all(s.convex for s in self.subs)

    @property
    def m(self):
        return len(self.subs)

    def qforms(self, theta):
        """Hotelling quadratic forms, shape (n, m) for ``theta`` of shape (n, d)."""
        T = np.atleast_2d(np.asarray(theta, dtype=float))
        R = T @ self.A.T - self.b
        return np.add.reduceat(R * R, self.starts, axis=1)

    def pvalues(self, theta):
        Q = self.qforms(theta)
        return self._pvalues(Q)

    def _pvalues(self, Q):
        dj = np.broadcast_to(self.dj, Q.shape)
        p = np.empty_like(Q)
        inf = ~self.finite
        if np.any(inf):
            p[:, inf] = special.gammaincc(dj[:, inf] / 2.0, Q[:, inf] / 2.0)
        if np.any(self.finite):
            d1 = dj[:, self.finite]
            k = self.df[self.finite]
            d2 = k + 1.0 - d1
            f = Q[:, self.finite] * d2 / (d1 * k)
            p[:, self.finite] = special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
        return p

    def batch(self, theta):
        p = self.pvalues(theta)
        with np.errstate(over="ignore", invalid="ignore"):
            s = self.transform(p) @ self.w
        return s

    def __call__(self, theta):
        return float(self.batch(np.atleast_1d(np.asarray(theta, dtype=float))[None, :])[0])

    def capped(self, theta):
        return min(self(theta), _SCORE_CAP)

    def gls(self):
        """Generalized least squares solution of the stacked system (min-norm if rank deficient)."""
        sol, *_ = np.linalg.lstsq(self.A, self.b, rcond=None)
        return sol

    def spans(self):
        return np.linalg.matrix_rank(self.A) == self.d

    def scale(self):
        """Per-coordinate standard error of the GLS solution (1 if unidentified)."""
        if not self.spans():
            return np.ones(self.d)
        cov = np.linalg.inv(self.A.T @ self.A)
        return np.sqrt(np.diag(cov))

    def threshold(self, level):
        if not 0 < level < 1:
            raise DomainError("level must lie in (0, 1)")
        if self.kind == "cct":
            return specfun.dist_quantile(specfun.DistKind.cauchy(), level)
        return get_null("hc" if self.kind == "hcct" else "pareto", self.w).quantile(level)


def _studies_1d(studies):
    out = []
    for s in studies:
        if isinstance(s, StudySummary1D):
            out.append(s)
        elif isinstance(s, SubStudy) and s.dj == 1 and s.d == 1:
            out.append(StudySummary1D(float(s.xi_hat[0] / s.P[0, 0]),
                                      float(np.sqrt(s.sigma_hat[0, 0]) / abs(s.P[0, 0])), s.df))
        else:
            out.append(StudySummary1D(*s))
    if not out:
        raise DomainError("need at least one study")
    return out


def score_1d(theta, studies, kind="hcct", w=None):
    """
    Combination score for scalar ``theta``.

    ``sum_j w_j F^{-1}(1 - p_j)`` with ``p_j`` the two-sided normal or
    Student-t p-value of ``(theta_hat_j - theta) / sigma_hat_j``.
    """
    k = str(kind).lower()
    if k not in ("hcct", "ehmp"):
        raise DomainError("score_1d supports hcct and ehmp")
    model = ScoreModel(_studies_1d(studies), k, w)
    t = np.asarray(theta, dtype=float)
    out = model.batch(t.reshape(-1, 1))
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


def score_md(theta, substudies, kind="hcct", w=None):
    """Combination score of the sub-study Hotelling p-values at ``theta``."""
    model = ScoreModel(substudies, kind, w)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[-1] != model.d:
        raise DomainError(f"theta must have length {model.d}")
    if theta.ndim == 1:
        return model(theta)
    return model.batch(theta)


# --------------------------------------------------------------------------
# one-dimensional inversion
# --------------------------------------------------------------------------

def _expand_root(f, x0, step, direction):
    # f(x0) <= 0; march outward doubling until f > 0, then Brent
    a = x0
    s = step
    for _ in range(60):
        b = x0 + direction * s
        if f(b) > 0:
            lo, hi = (a, b) if direction > 0 else (b, a)
            return brent_root(f, lo, hi, tol=1e-13 * max(abs(lo), abs(hi), step))
        a = b
        s *= 2
    raise StateError("interval does not close; score stays below the threshold")


def _invert_model_1d(model, thr, lo, hi, scale):
    f = lambda t: model.capped(np.array([t]))
    x, fx = brent_min(f, (lo, hi), tol=1e-10 * scale)
    if fx > thr:
        return IntervalResult.empty(), x, fx
    g = lambda t: f(t) - thr
    left = _expand_root(g, x, scale, -1)
    right = _expand_root(g, x, scale, +1)
    return IntervalResult.interval(left, right), x, fx


def invert_1d(studies, kind="hcct", w=None, level=0.95):
    """
    Confidence interval by inverting the HCCT/EHMP test on scalar studies.

    The score is convex, so the set is one interval (possibly empty).

    Returns
    -------
    IntervalResult
    """
    studies = _studies_1d(studies)
    k = str(kind).lower()
    if k not in ("hcct", "ehmp"):
        raise DomainError("invert_1d supports hcct and ehmp")
    model = ScoreModel(studies, k, w)
    thr = model.threshold(level)
    th = np.array([studies[i].theta_hat for i in model.index])
    sg = np.array([studies[i].sigma_hat for i in model.index])
    scale = max(th.max() - th.min(), sg.max())
    res, _, _ = _invert_model_1d(model, thr, th.min(), th.max(), scale)
    return res


def cct_invert_grid(studies, w=None, level=0.95, lo=None, hi=None, n=100001):
    """
    Grid inversion of the Cauchy combination test.

    Evaluates the CCT score on ``n`` equally spaced points and returns the
    maximal runs where it stays below the Cauchy quantile; run endpoints are
    then sharpened by root finding between neighbouring grid points.  The
    result may be a union of several intervals.
    """
    if n < 1000:
        raise DomainError("n must be at least 1000")
    studies = _studies_1d(studies)
    model = ScoreModel(studies, "cct", w)
    thr = model.threshold(level)
    th = np.array([s.theta_hat for s in studies])
    sg = np.array([s.sigma_hat for s in studies])
    if lo is None:
        lo = th.min() - 5 * sg.max()
    if hi is None:
        hi = th.max() + 5 * sg.max()
    grid = np.linspace(lo, hi, int(n))
    with np.errstate(invalid="ignore"):
        inside = model.batch(grid[:, None]) <= thr
    if not np.any(inside):
        return []
    f = lambda t: model(np.array([t])) - thr
    edges = np.diff(inside.astype(int))
    starts = list(np.flatnonzero(edges == 1) + 1)
    ends = list(np.flatnonzero(edges == -1))
    if inside[0]:
        starts.insert(0, 0)
    if inside[-1]:
        ends.append(len(grid) - 1)
    out = []
    for i, j in zip(starts, ends):
        a, b = grid[i], grid[j]
        if i > 0:
            a = _refine(f, grid[i - 1], grid[i], a)
        if j < len(grid) - 1:
            b = _refine(f, grid[j], grid[j + 1], b)
        out.append((float(a), float(b)))
    return out


def _refine(f, a, b, fallback):
    try:
        fa, fb = f(a), f(b)
        if np.isfinite(fa) and np.isfinite(fb) and np.sign(fa) != np.sign(fb):
            return brent_root(f, a, b, tol=1e-14)
    except (ValueError, FloatingPointError):
        pass
    return fallback


# --------------------------------------------------------------------------
# multivariate regions
# --------------------------------------------------------------------------

@dataclass
class RegionHandle:
    """
    Implicit convex region ``{theta : score(theta) <= threshold}``.

    ``point_estimate`` is the score minimizer, or None when the region is
    empty.  ``bounded`` records whether the projections of the studies with
    positive weight span the parameter space.
    """
    model: ScoreModel = field(repr=False)
    level: float
    threshold: float
    point_estimate: np.ndarray
    min_score: float
    bounded: bool
    argmin: np.ndarray = field(repr=False, default=None)

    @property
    def kind(self):
        return self.model.kind

    @property
    def weights(self):
        return self.model.all_weights

    @property
    def substudies(self):
        return self.model.all_substudies

    @property
    def d(self):
        return self.model.d

    @property
    def is_empty(self):
        return self.point_estimate is None

    def score(self, theta):
        return self.model(theta)

    def contains(self, theta):
        return contains(self, theta)

    def scale(self):
        return float(np.mean(self.model.scale()))


def build_region(substudies, kind="hcct", w=None, level=0.95, x0=None, tol=None):
    """
    Confidence region from sub-study summaries.

    The point estimate minimizes the score, starting from the GLS solution of
    the stacked projections; the region is empty when that minimum exceeds
    the threshold.

    Returns
    -------
    RegionHandle
    """
    model = ScoreModel(substudies, kind, w)
    thr = model.threshold(level)
    bounded = model.spans()
    sc = model.scale()
    if x0 is None:
        x0 = model.gls()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if model.d == 1:
        # convex scalar score: bracket by the study estimates
        ests = np.array([s.xi_hat[0] / s.P[0, 0] for s in model.subs
                         if s.dj == 1 and s.P[0, 0] != 0] or [x0[0]])
        lo, hi = min(ests.min(), x0[0]), max(ests.max(), x0[0])
        x, fx = brent_min(lambda t: model.capped(np.array([t])), (lo, hi),
                          tol=1e-10 * sc[0])
        xmin = np.array([x])
    else:
        if tol is None:
            tol = 1e-7 * float(np.mean(sc))
        r = minimize_df(model.capped, x0, tol=tol, step=sc)
        xmin, fx = r.x, r.fun
    if fx >= _SCORE_CAP:
        # score overflowed everywhere the search went; its argmin carries no
        # information, so report the pooled GLS fit instead
        xmin = model.gls()
    nonempty = fx <= thr
    return RegionHandle(model, level, thr, xmin if nonempty else None, float(fx),
                        bool(bounded), xmin)


def contains(region, theta):
    """Membership test ``score(theta) <= threshold``."""
    return region.model(np.atleast_1d(np.asarray(theta, dtype=float))) <= region.threshold


def _require_bounded(region):
    if region.is_empty:
        raise StateError("region is empty")
    if not region.bounded:
        raise StateError("region is unbounded: study projections do not span the parameter space")


def _ray_boundary(f, thr, c, dirs, scale):
    out = np.empty_like(dirs)
    for i, u in enumerate(dirs):
        r = boundary_distance(f, thr, c, u, scale)
        out[i] = c + r * u
    return out


def contour_2d(region, n_angles=256):
    """
    Boundary polygon of a two-dimensional region.

    One Brent root per ray from the point estimate, rays equally spaced in
    angle; vertices are returned in counter-clockwise order.
    """
    if region.d != 2:
        raise DomainError("contour_2d needs a two-dimensional region")
    if n_angles < 8:
        raise DomainError("n_angles must be at least 8")
    _require_bounded(region)
    ang = 2 * np.pi * np.arange(n_angles) / n_angles
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    return _ray_boundary(region.model.capped, region.threshold, region.point_estimate,
                         dirs, region.scale())


def slice_region(region, fixed, free):
    """
    Restrict a region to an affine slice.

    Parameters
    ----------
    region : RegionHandle
    fixed : dict
        Coordinate index -> fixed value.
    free : list of int
        One or two free coordinates.

    Returns
    -------
    IntervalResult for one free coordinate, or an ``(n, 2)`` vertex array
    (empty array if the slice misses the region) for two.
    """
    fixed = {int(k): float(v) for k, v in dict(fixed).items()}
    free = [int(i) for i in free]
    d = region.d
    if len(free) not in (1, 2):
        raise DomainError("free must list one or two coordinates")
    if sorted(list(fixed) + free) != list(range(d)):
        raise DomainError("fixed and free coordinates must partition 0..d-1")
    if region.is_empty:
        return IntervalResult.empty() if len(free) == 1 else np.empty((0, 2))
    base = np.array(region.point_estimate, dtype=float)
    for k, v in fixed.items():
        base[k] = v

    def embed(phi):
        t = base.copy()
        t[free] = phi
        return t

    g = lambda phi: region.model.capped(embed(np.atleast_1d(phi)))
    sc = region.model.scale()[free]
    thr = region.threshold
    start = region.point_estimate[free]
    if fixed:
        if len(free) == 1:
            span = 4 * max(float(sc[0]), 1e-12)
            lo, hi = start[0] - span, start[0] + span
            for _ in range(60):
                x, fx = brent_min(g, (lo, hi), tol=1e-10 * sc[0])
                if lo < x < hi and min(g(lo), g(hi)) > fx:
                    break
                lo, hi = lo - (hi - lo), hi + (hi - lo)
            c, fc = np.array([x]), fx
        else:
            r = minimize_df(g, start, tol=1e-7 * float(np.mean(sc)), step=sc)
            c, fc = r.x, r.fun
    else:
        c, fc = start, region.min_score
    if fc > thr:
        return IntervalResult.empty() if len(free) == 1 else np.empty((0, 2))
    if len(free) == 1:
        gg = lambda t: g(np.array([t])) - thr
        lo = _expand_root(gg, c[0], sc[0], -1)
        hi = _expand_root(gg, c[0], sc[0], +1)
        return IntervalResult.interval(lo, hi)
    n = 256
    ang = 2 * np.pi * np.arange(n) / n
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    return _ray_boundary(g, thr, c, dirs, float(np.mean(sc)))


slice = slice_region


def simultaneous_ci(region, b, lam=None):
    """
    Interval for ``b' theta`` obtained by projecting the region.

    Intervals computed for any collection of ``b`` hold simultaneously at
    the region's confidence level.
    """
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if b.size != region.d:
        raise DomainError(f"b must have length {region.d}")
    if not np.any(b):
        raise DomainError("b must be nonzero")
    if region.is_empty:
        return IntervalResult.empty()
    _require_bounded(region)
    kw = {} if lam is None else {"lam": lam}
    f = region.model.capped
    sc = region.scale()
    lo = penalty_extreme("min", b, f, region.threshold, x0=region.point_estimate, scale=sc, **kw)
    hi = penalty_extreme("max", b, f, region.threshold, x0=region.point_estimate, scale=sc, **kw)
    return IntervalResult.interval(lo, hi)


# --------------------------------------------------------------------------
# empty regions
# --------------------------------------------------------------------------

def lower_bound_stat(studies, w=None):
    """
    Lower bound ``sum_j w_j |theta_hat_j - theta_med| / sigma_hat_j`` on the
    minimal HCCT score, with ``theta_med`` the lower weighted median under
    probabilities proportional to ``w_j / sigma_hat_j``.
    """
    studies = _studies_1d(studies)
    w = Weights.coerce(w, len(studies)).values
    th = np.array([s.theta_hat for s in studies])
    sg = np.array([s.sigma_hat for s in studies])
    c = w / sg
    order = np.argsort(th, kind="stable")
    cum = np.cumsum(c[order]) / c.sum()
    med = th[order][np.searchsorted(cum, 0.5 - 1e-15)]
    return float(np.sum(c * np.abs(th - med)))


def heterogeneity_scores(studies, theta_fit):
    """Per-study Hotelling quadratic forms at a fitted ``theta``."""
    subs = _as_substudies(studies)
    theta = np.atleast_1d(np.asarray(theta_fit, dtype=float))
    out = []
    for s in subs:
        r = linalg.solve_triangular(s.chol, s.xi_hat - s.P @ theta, lower=True)
        out.append(float(r @ r))
    return np.array(out)


@dataclass
class AdaptiveResult:
    region: RegionHandle
    dropped: list

    def __iter__(self):
        yield self.region
        yield self.dropped


def adaptive_nonempty(studies, kind="hcct", w0=None, level=0.95, require_span=True):
    """
    Drop outlying studies until the region becomes nonempty.

    While the region is empty, the study with the largest heterogeneity
    score at the current score minimizer gets weight zero, the remaining
    weights are rescaled proportionally, and the threshold is recomputed.

    Returns
    -------
    (RegionHandle, list of dropped indices)

    Raises
    ------
    SpanError
        If a drop would leave projections that do not span the parameter
        space (only when ``require_span``).
    """
    subs = _as_substudies(studies)
    w = Weights.coerce(w0, len(subs)).values.copy()
    dropped = []
    while True:
        region = build_region(subs, kind, w, level)
        if not region.is_empty:
            return AdaptiveResult(region, dropped)
        active = np.flatnonzero(w > 0)
        if active.size == 1:
            return AdaptiveResult(region, dropped)
        q = heterogeneity_scores([subs[i] for i in active], region.argmin)
        j = int(active[np.argmax(q)])
        w_new = w.copy()
        w_new[j] = 0.0
        if require_span and region.bounded:
            A = np.vstack([subs[i].P for i in np.flatnonzero(w_new > 0)])
            if np.linalg.matrix_rank(A) < region.d:
                raise SpanError(f"dropping study {j} breaks the span condition",
                                dropped + [j])
        dropped.append(j)
        w = w_new / w_new.sum()
