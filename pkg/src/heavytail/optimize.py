"""
Derivative-free root finding and minimization used for region inversion.

Thin contracts over :mod:`scipy.optimize`: Brent's root finder, bounded
Brent minimization and the (dimension-adaptive) Nelder-Mead simplex.
"""
from dataclasses import dataclass, field
import warnings

import numpy as np
from scipy import optimize as _sopt

from .errors import BracketError, ConvergenceWarning

DEFAULT_LAMBDA = float(np.exp(20.0))


def brent_root(f, a, b, tol=1e-12, maxiter=200):
    """
    Root of ``f`` on ``[a, b]`` by Brent's method.

    Parameters
    ----------
    f : callable
        Scalar function, continuous on the bracket.
    a, b : float
        Bracket endpoints with ``f(a) * f(b) <= 0``.
    tol : float
        Absolute tolerance on the bracket width.

    Raises
    ------
    BracketError
        If ``f`` has the same strict sign at both endpoints.
    """
    fa, fb = f(a), f(b)
    if fa == 0:
        return float(a)
    if fb == 0:
        return float(b)
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a}, {b}]: f = ({fa}, {fb})")
    return float(_sopt.brentq(f, a, b, xtol=tol, rtol=4 * np.finfo(float).eps,
                              maxiter=maxiter))


def brent_min(f, bracket, tol=1e-8):
    """
    Minimize a unimodal scalar function on ``bracket = (a, b)`` or ``(a, c, b)``.

    Golden-section search accelerated by parabolic interpolation.

    Returns
    -------
    x, fx : float
    """
    a, b = float(bracket[0]), float(bracket[-1])
    if a == b:
        return a, float(f(a))
    if a > b:
        a, b = b, a
    res = _sopt.minimize_scalar(f, bounds=(a, b), method="bounded",
                                options={"xatol": tol, "maxiter": 500})
    x, fx = float(res.x), float(res.fun)
    # the bounded method never evaluates the endpoints
    for e in (a, b):
        fe = float(f(e))
        if fe < fx:
            x, fx = e, fe
    if not np.isfinite(fx):
        raise FloatingPointError("non-finite objective at the minimizer")
    return x, fx


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    nfev: int = 0
    converged: bool = True
    message: str = ""

    def __iter__(self):
        yield self.x
        yield self.fun


def _simplex(x0, step):
    d = x0.size
    sim = np.repeat(x0[None, :], d + 1, axis=0)
    for i in range(d):
        sim[i + 1, i] += step[i]
    return sim


def minimize_df(f, x0, tol=1e-6, max_iter=None, step=None):
    """
    Derivative-free minimization of a convex function.

    Adaptive Nelder-Mead started from an axis simplex around ``x0``, then
    restarted once from the best vertex.  Terminates once the simplex
    diameter falls below ``tol``.

    Parameters
    ----------
    f : callable
        Objective ``R^d -> R``.
    x0 : array_like
        Start point, where ``f`` must be finite.
    tol : float
        Simplex-diameter tolerance.
    max_iter : int, optional
        Iteration cap per run (default ``400 * d``, at least 2000).
    step : float or array_like, optional
        Initial simplex edge per coordinate.

    Returns
    -------
    MinimizeResult
        Unpacks as ``x, fx``; ``converged`` is False (and a
        :class:`ConvergenceWarning` is issued) if the cap was hit with
        diameter above ``100 * tol``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size
    if max_iter is None:
        max_iter = max(2000, 400 * d)
    if step is None:
        step = np.where(x0 != 0, 0.05 * np.abs(x0), 0.00025)
        step = np.maximum(step, 10 * tol)
    step = np.broadcast_to(np.asarray(step, dtype=float), (d,)).copy()
    if not np.isfinite(f(x0)):
        raise ValueError("objective is not finite at x0")
    opts = {"xatol": tol, "fatol": np.inf, "maxiter": max_iter,
            "maxfev": 10 * max_iter, "adaptive": d > 1}
    nfev = 0
    x = x0
    res = None
    for _ in range(2):
        res = _sopt.minimize(f, x, method="Nelder-Mead",
                             options=dict(opts, initial_simplex=_simplex(x, step)))
        nfev += res.nfev
        x = res.x
    sim = res.final_simplex[0]
    diam = float(np.max(np.abs(sim - sim[0])))
    ok = diam <= 100 * tol
    if not ok:
        warnings.warn(f"simplex diameter {diam:.3g} after {max_iter} iterations",
                      ConvergenceWarning, stacklevel=2)
    return MinimizeResult(np.asarray(x, dtype=float), float(res.fun), nfev, ok, res.message)


def boundary_distance(score, threshold, x0, u, scale):
    """
    Distance ``r`` from a feasible ``x0`` along direction ``u`` to the point
    where ``score(x0 + r u)`` crosses ``threshold`` (inf if it never does).
    """
    g = lambda s: score(x0 + s * u) - threshold
    a, s = 0.0, float(scale)
    for _ in range(80):
        if g(s) > 0:
            break
        a, s = s, 2 * s
    else:
        return np.inf
    return brent_root(g, a, s, tol=1e-13 * s)


def penalty_extreme(direction, b, score, threshold, lam=DEFAULT_LAMBDA, x0=None,
                    scale=1.0, tol=None, return_point=False):
    """
    Extreme value of ``b' theta`` over ``{score(theta) <= threshold}``.

    Minimizes ``+-b' theta + lam * max(score(theta) - threshold, 0)`` from
    three starts (``x0`` and two points along ``b``), then polishes the best
    solution on the boundary by a simplex search over directions from the
    interior start.

    Parameters
    ----------
    direction : {"min", "max"}
    b : array_like
        Linear functional.
    score : callable
        Convex score function.
    threshold : float
        Region threshold.
    lam : float
        Penalty multiplier.
    x0 : array_like
        A feasible point.
    scale : float
        Typical length scale of the region, used for starting steps.
    """
    direction = str(direction).lower()
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    sgn = 1.0 if direction == "min" else -1.0
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    s0 = score(x0)
    if not s0 <= threshold:
        raise ValueError("x0 is not feasible: score(x0) > threshold")
    slack = 1e-6 * max(abs(threshold), 1e-300)
    bn = float(np.linalg.norm(b))
    u = b / bn
    if tol is None:
        tol = 1e-3 * scale

    def obj(t):
        return sgn * float(b @ t) + lam * max(score(t) - threshold, 0.0)

    # starts spread along the functional
    hi = boundary_distance(score, threshold, x0, u, scale)
    lo = boundary_distance(score, threshold, x0, -u, scale)
    starts = [x0]
    for s in (0.5 * hi, -0.5 * lo):
        if np.isfinite(s):
            starts.append(x0 + s * u)
    best = None
    for st in starts:
        r = minimize_df(obj, st, tol=tol, step=np.full(x0.size, 0.25 * scale))
        if best is None or r.fun < best.fun:
            best = r
    x = best.x
    if score(x) > threshold + slack:
        # pull the point back onto the region along the ray from x0
        x = _to_boundary(score, threshold, x0, x)
    x = _polish(sgn, b, score, threshold, x0, x, scale)
    val = float(b @ x)
    if return_point:
        return val, x
    return val


def _to_boundary(score, threshold, x0, x):
    g = lambda t: score(x0 + t * (x - x0)) - threshold
    t = brent_root(g, 0.0, 1.0, tol=1e-14)
    # stay on the feasible side of the root
    while g(t) > 0 and t > 0:
        t = np.nextafter(t, 0.0) if t < 1e-300 else t * (1 - 1e-14)
    return x0 + t * (x - x0)


def _ray_root(score, threshold, c, u, guess):
    # boundary distance along u, bracketed around a nearby previous value
    g = lambda s: score(c + s * u) - threshold
    lo, hi = guess / 1.25, guess * 1.25
    for _ in range(200):
        if g(hi) > 0:
            break
        lo, hi = hi, 2 * hi
    else:
        return np.inf
    for _ in range(200):
        if g(lo) <= 0:
            break
        hi, lo = lo, lo / 2
    else:
        lo = 0.0
    return brent_root(g, lo, hi, tol=1e-12 * hi)


def _polish(sgn, b, score, threshold, c, x, scale):
    """Refine a boundary point by optimizing over ray directions from c."""
    d = c.size
    v = x - c
    r0 = float(np.linalg.norm(v))
    if r0 == 0 or d == 1:
        if d == 1:
            # 1-D: the extreme is simply the boundary root on the right side
            u = -np.sign(sgn * b) if np.any(b) else np.ones(1)
            r = boundary_distance(score, threshold, c, u, max(scale, r0))
            return c + r * u
        return x

    last = [r0]

    def boundary(dirv):
        n = np.linalg.norm(dirv)
        if n == 0:
            return None
        u = dirv / n
        r = _ray_root(score, threshold, c, u, last[0])
        if not np.isfinite(r):
            return None
        last[0] = r
        return c + r * u

    def obj(dirv):
        p = boundary(dirv)
        if p is None:
            return np.inf
        return sgn * float(b @ p)

    # the objective is flat to first order at the optimum, so a loose
    # direction tolerance still gives a near machine-precision value
    res = minimize_df(obj, v / r0, tol=1e-5, step=np.full(d, 0.05))
    p = boundary(res.x)
    if p is None or obj(res.x) > sgn * float(b @ x):
        return x
    return p
