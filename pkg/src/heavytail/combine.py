"""
Combination of p-values.

HCCT sums ``w_j cot(pi p_j / 2)`` (Half-Cauchy scores), EHMP sums
``w_j / p_j`` (Pareto(1,1) scores) and CCT sums ``w_j cot(pi p_j)``
(Cauchy scores).  Fisher, Stouffer, weighted Bonferroni and Simes are
provided as baselines.
"""
import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedWeightsError
from .nulldist import Weights, get_null

KINDS = ("hcct", "ehmp", "cct", "fisher", "stouffer", "bonferroni", "simes")


def _kind(kind):
    k = str(kind).lower()
    if k not in KINDS:
        raise DomainError(f"unknown combiner {kind!r}; expected one of {KINDS}")
    return k


def _prep(p, w):
    p = np.atleast_1d(np.asarray(p, dtype=float)).ravel()
    if p.size == 0:
        raise DomainError("need at least one p-value")
    if np.any(~((p >= 0) & (p <= 1))):
        raise DomainError("p-values must lie in [0, 1]")
    w = Weights.coerce(w, p.size).values
    if w.size != p.size:
        raise DomainError(f"{p.size} p-values but {w.size} weights")
    return p, w


def _require_equal(kind, w):
    if not np.allclose(w, w[0], rtol=0, atol=1e-12):
        raise UnsupportedWeightsError(f"{kind} only supports equal weights")


def hc_score(p):
    """``cot(pi p / 2)``, the Half-Cauchy quantile at ``1 - p``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(p >= 1, 0.0, 1.0 / np.tan(np.pi * p / 2))


def pareto_score(p):
    """``1 / p``, the Pareto(1,1) quantile at ``1 - p``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / p


def cauchy_score(p):
    """``cot(pi p)``, the standard Cauchy quantile at ``1 - p``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / np.tan(np.pi * p)
    out = np.where(p >= 1, -np.inf, out)
    return np.where(p <= 0, np.inf, out)


def statistic(kind, p, w=None):
    """
    Combination statistic.

    Parameters
    ----------
    kind : str
        One of ``hcct, ehmp, cct, fisher, stouffer, bonferroni, simes``.
    p : array_like
        p-values in [0, 1].
    w : array_like, optional
        Weights (default equal).  Fisher and Simes need equal weights.

    Returns
    -------
    float
        For Bonferroni the statistic is ``min p_j / w_j`` and for Simes
        ``min_k (m/k) p_(k)``; both are small under the alternative.
    """
    kind = _kind(kind)
    p, w = _prep(p, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind == "hcct":
            return float(np.sum(w * hc_score(p)))
        if kind == "ehmp":
            return float(np.sum(w * pareto_score(p)))
        if kind == "cct":
            s = cauchy_score(p)
            if np.any(np.isposinf(s)):
                return np.inf
            return float(np.sum(w * s))
        if kind == "fisher":
            _require_equal(kind, w)
            return float(-2.0 * np.sum(np.log(p)))
        if kind == "stouffer":
            z = -special.ndtri(p)
            if np.any(np.isposinf(z)):
                return np.inf
            return float(np.sum(w * z))
        if kind == "bonferroni":
            pos = w > 0
            return float(np.min(p[pos] / w[pos]))
        _require_equal(kind, w)
        m = p.size
        ps = np.sort(p)
        return float(np.min(m * ps / np.arange(1, m + 1)))


def global_pvalue(kind, p, w=None):
    """Global p-value of the combination test under independence."""
    kind = _kind(kind)
    p, w = _prep(p, w)
    t = statistic(kind, p, w)
    if kind in ("hcct", "ehmp"):
        nd = get_null("hc" if kind == "hcct" else "pareto", w)
        out = float(nd.sf(t))
    elif kind == "cct":
        if np.isnan(t):
            out = 1.0
        elif np.isinf(t):
            out = 0.0 if t > 0 else 1.0
        else:
            out = float(np.arctan2(1.0, t) / np.pi)
    elif kind == "fisher":
        out = float(special.chdtrc(2 * p.size, t))
    elif kind == "stouffer":
        out = float(special.ndtr(-t / np.sqrt(np.sum(w ** 2))))
    else:
        out = t
    return min(max(out, 0.0), 1.0)


def reject(kind, p, w=None, alpha=0.05):
    """
    True iff the global p-value is at most ``alpha``.

    For HCCT and EHMP this is decided by comparing the statistic with the
    cached ``1 - alpha`` null quantile, which avoids one integral per call.
    """
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    kind = _kind(kind)
    if kind in ("hcct", "ehmp"):
        p, w = _prep(p, w)
        return statistic(kind, p, w) >= threshold(kind, w, alpha)
    return global_pvalue(kind, p, w) <= alpha


def threshold(kind, w, alpha=0.05):
    """Critical value of the HCCT/EHMP statistic at level ``alpha``."""
    kind = _kind(kind)
    if kind not in ("hcct", "ehmp"):
        raise DomainError("thresholds are only defined here for hcct and ehmp")
    return get_null("hc" if kind == "hcct" else "pareto", w).quantile(1.0 - alpha)
