"""
Null distribution of weighted Half-Cauchy and Pareto(1,1) sums.

For independent uniform p-values the combination statistic
``T = sum_j w_j F^{-1}(1 - p_j)`` is a weighted sum of i.i.d. Half-Cauchy
(HCCT) or Pareto(1,1) (EHMP) variables.  Its density and CDF are obtained
by inverting the Laplace transform along the imaginary axis::

    f(x)     = (1/pi) int_0^inf exp(-xz) Im prod_j phi(w_j z) dz
    1 - F(x) = (1/pi) int_0^inf exp(-xz)/z Im prod_j phi(w_j z) dz

where ``phi`` is the bracketed factor returned (in log form) by
:func:`~heavytail.specfun.log_factor_hc` or
:func:`~heavytail.specfun.log_factor_pareto`.  For more than
``exact_m_max()`` effective weights the Landau limit is used instead.

Close to zero the Half-Cauchy integrand decays only like ``exp(-xz)``, so
for ``x < 1`` and at most 50 weights the transform is inverted on a fixed
Talbot contour instead.  Points whose Chernoff bound puts the CDF far
below double precision return zero density and zero CDF.
"""
import math
import os
import threading
import warnings

import numpy as np
from scipy import integrate, optimize

from . import specfun
from .errors import ConvergenceWarning, DomainError, NumericError
from .optimize import brent_root

HC = "hc"
PARETO = "pareto"

_KIND_ALIASES = {"hc": HC, "hcct": HC, "halfcauchy": HC, "half_cauchy": HC,
                 "pareto": PARETO, "ehmp": PARETO, "pareto11": PARETO}

_EPS_Z = 1e-12
# Half-Cauchy sums below this value are inverted on a Talbot contour
_TALBOT_X = 1.0
_TALBOT_M = 24
_TALBOT_M_MAX = 50
# below this Chernoff bound on the CDF both pdf and cdf are reported as zero
_LOG_TINY = math.log(1e-15)
_QUAD_WARN = 1e-9 * math.pi


def exact_m_max():
    """Largest number of weights handled exactly (env ``HEAVYTAIL_EXACT_M_MAX``)."""
    v = os.environ.get("HEAVYTAIL_EXACT_M_MAX")
    if v is None or v == "":
        return 1000
    try:
        return int(v)
    except ValueError:
        raise DomainError(f"HEAVYTAIL_EXACT_M_MAX must be an integer, got {v!r}")


class Weights:
    """
    Nonnegative combination weights summing to one.

    Vectors whose sum is within 1e-6 of one are renormalized; anything
    further off is rejected.
    """

    def __init__(self, values):
        v = np.atleast_1d(np.asarray(values, dtype=float)).ravel()
        if v.size == 0:
            raise DomainError("weights must be nonempty")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise DomainError("weights must be finite and nonnegative")
        s = v.sum()
        if abs(s - 1.0) > 1e-6:
            raise DomainError(f"weights must sum to 1 (got {s:.9g})")
        self.values = v / s
        self.values.setflags(write=False)

    @classmethod
    def equal(cls, m):
        return cls(np.full(int(m), 1.0 / int(m)))

    @classmethod
    def coerce(cls, w, m=None):
        if w is None:
            return cls.equal(m)
        if isinstance(w, Weights):
            return w
        return cls(w)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __repr__(self):
        return f"Weights({np.array2string(self.values, precision=4)})"

    @property
    def nonzero(self):
        return self.values[self.values > 0]


class NullDistribution:
    """
    Null law of a weighted Half-Cauchy or Pareto(1,1) sum.

    Parameters
    ----------
    kind : {"hc", "pareto"}
        Summand law (aliases "hcct" and "ehmp" accepted).
    weights : array_like or Weights
        Combination weights; zero entries are dropped.
    mode : {"exact", "landau"}, optional
        Force an evaluation mode.  By default the exact integral is used for
        up to :func:`exact_m_max` weights and the Landau limit above.
    """

    def __init__(self, kind, weights, mode=None):
        kind = _KIND_ALIASES.get(str(kind).lower())
        if kind is None:
            raise DomainError("kind must be 'hc' or 'pareto'")
        self.kind = kind
        w = Weights.coerce(weights)
        self.w = np.array(w.nonzero)
        self.w.setflags(write=False)
        if mode is None:
            mode = "exact" if self.w.size <= exact_m_max() else "landau"
        if mode not in ("exact", "landau"):
            raise DomainError("mode must be 'exact' or 'landau'")
        self.mode = mode
        self.support_min = 0.0 if kind == HC else 1.0
        self._logfac = specfun.log_factor_hc if kind == HC else specfun.log_factor_pareto
        self._memo = {}
        self._lock = threading.Lock()

    @property
    def m(self):
        return self.w.size

    def __repr__(self):
        return f"NullDistribution({self.kind!r}, m={self.m}, mode={self.mode!r})"

    # -- Landau limit ------------------------------------------------------
    def center(self):
        return hybrid_center(self)

    def _landau_params(self):
        c = 1.0 if self.kind == HC else np.pi / 2
        return specfun.LandauParams(self.center(), c)

    # -- exact integrals ---------------------------------------------------
    def _logprod(self, z):
        # log prod_j phi(w_j z) - x z is assembled by the caller
        z = np.atleast_1d(z)
        a = np.multiply.outer(z, self.w)
        return self._logfac(a.ravel()).reshape(a.shape).sum(axis=1)

    def _integrand(self, z, x, cdf):
        lp = self._logprod(z)[0]
        v = math.exp(lp.real - x * z) * math.sin(lp.imag)
        return v / z if cdf else v

    def _upper_limit(self, x):
        delta = x - self.support_min
        zmax = max(60.0, 60.0 / max(delta, 0.05))
        # push further out while the integrand envelope is still non-negligible
        for _ in range(60):
            lp = self._logprod(np.array([zmax, 1.1 * zmax]))
            env = lp.real - x * np.array([zmax, 1.1 * zmax])
            if env[0] < -40 and env[1] < env[0]:
                break
            zmax *= 2.0
        return zmax

    def _integral(self, x, cdf):
        delta = x - self.support_min
        eps = _EPS_Z * min(1.0, 1.0 / delta)
        z1 = min(1.0, 1.0 / delta)
        zmax = self._upper_limit(x)
        edges = [eps, z1]
        z = z1
        while z < zmax:
            z = min(zmax, 8.0 * z)
            edges.append(z)
        total = err = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            # full_output keeps quad quiet about the (very tight) tolerances;
            # its error estimate is checked below instead
            val, e, *_ = integrate.quad(self._integrand, a, b, args=(x, cdf),
                                        epsabs=1e-13, epsrel=1e-12, limit=500, full_output=1)
            total += val
            err += e
        if not np.isfinite(total):
            raise NumericError(f"null-distribution integral failed at x={x}")
        if err > _QUAD_WARN:
            warnings.warn(f"inversion integral at x={x:g} has error estimate {err / np.pi:.2g}",
                          ConvergenceWarning, stacklevel=3)
        return total / np.pi

    def _talbot(self, x, cdf):
        # Fixed Talbot inversion for Half-Cauchy sums close to zero, where the
        # integrand above decays like exp(-xz) and needs a huge range.
        M = _TALBOT_M
        r = 2.0 * M / (5.0 * x)
        th = np.arange(1, M) * (np.pi / M)
        cot = 1.0 / np.tan(th)
        s = np.concatenate([[r + 0j], r * th * (cot + 1j)])
        a = np.multiply.outer(s, self.w)
        logl = np.log(specfun.laplace_half_cauchy_complex(a.ravel())).reshape(a.shape).sum(axis=1)
        if cdf:
            logl = logl - np.log(s)
        g = np.exp(x * s + logl)
        sig = th + (th * cot - 1.0) * cot
        val = 0.5 * g[0].real + np.sum((g[1:] * (1.0 + 1j * sig)).real)
        out = r / M * val
        if not np.isfinite(out):
            raise NumericError(f"Talbot inversion failed at x={x}")
        return float(out)

    def _log_laplace(self, s):
        a = s * self.w
        if self.kind == HC:
            return float(np.sum(np.log(specfun.laplace_half_cauchy(a))))
        # log E2(a) = -a + log(1 - a e^a E1(a))
        e1s = specfun.e1_scaled_complex(a).real
        return float(np.sum(-a + np.log(np.maximum(1.0 - a * e1s, 1e-300))))

    def _log_cdf_bound(self, x):
        # Chernoff: F(x) <= exp(s x) L(s) for every s > 0; returns the bound
        # and the minimizing tilt s
        f = lambda t: math.exp(t) * x + self._log_laplace(math.exp(t))
        res = optimize.minimize_scalar(f, bounds=(-10.0, 40.0), method="bounded",
                                       options={"xatol": 1e-3})
        return min(float(res.fun), 0.0), math.exp(res.x)

    def _negligible(self, x):
        # far in the left tail the density behaves like s F(x) with s the
        # Chernoff tilt; a factor 10 of slack covers the prefactor
        lb, s = self._log_cdf_bound(x)
        return lb + math.log(max(s, 1.0)) + math.log(10.0) < _LOG_TINY

    def _left_of_precision(self, x):
        return self.m > 1 and x < self.center() and self._negligible(x)

    def _use_talbot(self, x):
        return self.kind == HC and x < _TALBOT_X and self.m <= _TALBOT_M_MAX

    # -- public API --------------------------------------------------------
    def pdf(self, x):
        return _vec(self._pdf1, x)

    def cdf(self, x):
        return _vec(lambda v: 1.0 - self._sf1(v), x)

    def sf(self, x):
        return _vec(self._sf1, x)

    def _pdf1(self, x):
        if x <= self.support_min:
            return 0.0
        if self.mode == "landau":
            return float(specfun.landau_pdf(x, self._landau_params()))
        if self._left_of_precision(x):
            return 0.0
        if self._use_talbot(x):
            return max(self._talbot(x, False), 0.0)
        return max(self._integral(x, False), 0.0)

    def _sf1(self, x):
        if x <= self.support_min:
            return 1.0
        if np.isinf(x):
            return 0.0
        if self.mode == "landau":
            return float(specfun.landau_sf(x, self._landau_params()))
        if self.m == 1:
            base = specfun.DistKind.half_cauchy() if self.kind == HC else specfun.DistKind.pareto11()
            return float(specfun.dist_sf(base, x / self.w[0]))
        if self._left_of_precision(x):
            return 1.0
        if self._use_talbot(x):
            return min(max(1.0 - self._talbot(x, True), 0.0), 1.0)
        return min(max(self._integral(x, True), 0.0), 1.0)

    def quantile(self, u):
        """x with ``cdf(x) = u``; results are memoized per instance."""
        u = float(u)
        if not 0.0 < u < 1.0:
            raise DomainError("u must lie in (0, 1)")
        hit = self._memo.get(u)
        if hit is not None:
            return hit
        x = self._quantile(u)
        with self._lock:
            self._memo.setdefault(u, x)
        return x

    def isf(self, p):
        return self.quantile(1.0 - float(p))

    def _quantile(self, u):
        if self.m == 1 and self.mode == "exact":
            base = specfun.DistKind.half_cauchy() if self.kind == HC else specfun.DistKind.pareto11()
            return self.w[0] * specfun.dist_quantile(base, u)
        p = 1.0 - u
        scale = 2.0 / np.pi if self.kind == HC else 1.0
        smin = self.support_min
        # tail equivalence 1 - F(x) ~ scale / x gives the starting guess
        g = lambda x: p - self._sf1(x)
        hi = smin + max(scale / p, 1.0)
        lo = None
        for _ in range(200):
            if g(hi) >= 0:
                break
            lo = hi
            hi = smin + 2.0 * (hi - smin)
        if lo is None:
            lo = hi
            for _ in range(200):
                lo = smin + 0.5 * (lo - smin)
                if g(lo) <= 0:
                    break
        return brent_root(g, lo, hi, tol=1e-10 * max(1.0, hi))


def _vec(fn, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return fn(float(x))
    return np.array([fn(float(v)) for v in x.ravel()]).reshape(x.shape)


def _as_nd(nd_or_kind, weights=None, mode=None):
    if isinstance(nd_or_kind, NullDistribution):
        return nd_or_kind
    return NullDistribution(nd_or_kind, weights, mode)


def exact_pdf(nd, x):
    """Density of the weighted sum at ``x`` (0 at or below the support minimum)."""
    return _as_nd(nd).pdf(x)


def exact_cdf(nd, x):
    """CDF of the weighted sum at ``x``."""
    return _as_nd(nd).cdf(x)


def quantile(nd, u):
    """Quantile of the weighted sum, e.g. ``quantile(nd, 0.95)`` for a 5% threshold."""
    return _as_nd(nd).quantile(u)


def hybrid_center(nd):
    """
    Landau centering constant ``-sum w log w + 1 - gamma``, times ``2/pi``
    for Half-Cauchy summands.
    """
    w = nd.w
    if w.size == 0:
        raise DomainError("no positive weights")
    h = -float(np.sum(w * np.log(w)))
    c = h + 1.0 - specfun.EULER_GAMMA
    return (2.0 / np.pi) * c if nd.kind == HC else c


_CACHE = {}
_CACHE_LOCK = threading.Lock()


def get_null(kind, weights, mode=None):
    """Shared :class:`NullDistribution` keyed on (kind, weights, mode)."""
    w = np.asarray(Weights.coerce(weights).values)
    key = (_KIND_ALIASES.get(str(kind).lower(), kind), w.tobytes(), mode, exact_m_max())
    nd = _CACHE.get(key)
    if nd is None:
        nd = NullDistribution(kind, w, mode)
        with _CACHE_LOCK:
            nd = _CACHE.setdefault(key, nd)
    return nd
