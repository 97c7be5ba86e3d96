"""
Seeded Monte-Carlo experiments: false-positive rate, coverage, power and
divide-and-combine coverage under correlated normal (or lognormal) data.

Every replicate draws from its own Philox stream keyed by
``(seed, replicate, role)``, so results do not depend on how replicates
are split across worker threads.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import combine
from .confregion import ScoreModel, StudySummary1D, SubStudy, invert_1d
from .divide_combine import dac_covers
from .errors import DomainError

ROLE_DATA = 0
ROLE_AUX = 1

CORR_KINDS = ("identity", "equi", "ar1")

# desk-scale defaults; the full-scale values are only reachable explicitly
DESK = {"reps": 1000, "reps_region": 300, "m": 20}
FULL = {"reps": 10000, "reps_region": 10000, "m": 500}


@dataclass(frozen=True)
class CorrSpec:
    """Correlation structure of an ``m``-dimensional standard normal vector."""
    kind: str
    m: int
    rho: float = 0.0

    def __post_init__(self):
        k = str(self.kind).lower()
        if k not in CORR_KINDS:
            raise DomainError(f"unknown correlation kind {self.kind!r}")
        object.__setattr__(self, "kind", k)
        if int(self.m) < 1:
            raise DomainError("m must be positive")
        object.__setattr__(self, "m", int(self.m))
        if not 0 <= self.rho < 1:
            raise DomainError("rho must lie in [0, 1)")
        if k == "identity" and self.rho != 0:
            raise DomainError("identity correlation has rho = 0")

    @classmethod
    def identity(cls, m):
        return cls("identity", m, 0.0)

    @classmethod
    def equi(cls, m, rho):
        return cls("equi", m, rho)

    @classmethod
    def ar1(cls, m, rho):
        return cls("ar1", m, rho)

    def matrix(self):
        i = np.arange(self.m)
        if self.kind == "ar1":
            return self.rho ** np.abs(i[:, None] - i[None, :])
        S = np.full((self.m, self.m), self.rho)
        np.fill_diagonal(S, 1.0)
        return S


@dataclass(frozen=True)
class SignalSpec:
    """Sparse mean shift: the first ``m0 = floor(m^(1-s))`` means equal ``sqrt(2 r log m0)``."""
    r: float
    s: float
    m: int

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("r must be nonnegative")
        if not 0 <= self.s < 1:
            raise DomainError("s must lie in [0, 1)")
        if self.m0 < 1:
            raise DomainError("m0 must be at least 1")

    @property
    def m0(self):
        return int(np.floor(self.m ** (1 - self.s) + 1e-9))

    @property
    def mu(self):
        return float(np.sqrt(2 * self.r * np.log(self.m0))) if self.m0 > 1 else 0.0

    def mean(self):
        out = np.zeros(self.m)
        out[:self.m0] = self.mu
        return out


def rng_for(seed, replicate=0, role=ROLE_DATA):
    """Counter-based generator for one ``(seed, replicate, role)`` key."""
    ss = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(replicate), int(role)])
    return np.random.Generator(np.random.Philox(ss))


def _factor(spec):
    if spec.kind == "ar1":
        try:
            return np.linalg.cholesky(spec.matrix())
        except np.linalg.LinAlgError:
            raise DomainError("correlation matrix is not positive definite")
    return None


def _draw(rng, n, spec, chol):
    if spec.kind == "equi" and spec.rho > 0:
        z0 = rng.standard_normal((n, 1))
        z = rng.standard_normal((n, spec.m))
        return np.sqrt(spec.rho) * z0 + np.sqrt(1 - spec.rho) * z
    z = rng.standard_normal((n, spec.m))
    return z if chol is None else z @ chol.T


def mvn_sample(n, spec, mean=None, seed=0, replicate=0):
    """
    ``n`` draws from ``N_m(mean, Sigma)`` with ``Sigma`` given by ``spec``.

    Equi-correlation uses ``sqrt(rho) Z0 + sqrt(1 - rho) Z_i``; AR(1) goes
    through the Cholesky factor.
    """
    X = _draw(rng_for(seed, replicate), int(n), spec, _factor(spec))
    if mean is not None:
        X = X + np.broadcast_to(np.asarray(mean, dtype=float), (spec.m,))
    return X


def _map_reps(fn, reps, workers):
    if workers is None or workers <= 1:
        return [fn(i) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=int(workers)) as ex:
        return list(ex.map(fn, range(reps)))


def two_sided_p(x):
    return 2.0 * special.ndtr(-np.abs(x))


def _rejection_rate(kind, spec, mean, alpha, reps, seed, workers):
    if reps < 100:
        raise DomainError("reps must be at least 100")
    chol = _factor(spec)

    def one(i):
        x = _draw(rng_for(seed, i), 1, spec, chol)[0]
        if mean is not None:
            x = x + mean
        return combine.reject(kind, two_sided_p(x), None, alpha)

    return float(np.mean(_map_reps(one, reps, workers)))


def experiment_fpr(kind, spec, alpha=0.05, reps=1000, seed=0, workers=1):
    """Empirical false-positive rate of a combination test under the global null."""
    return _rejection_rate(kind, spec, None, alpha, reps, seed, workers)


def experiment_power(kind, spec, signal, alpha=0.05, reps=1000, seed=0, workers=1):
    """Rejection rate with the mean shift of ``signal``."""
    if signal.m != spec.m:
        raise DomainError("signal and correlation dimensions differ")
    return _rejection_rate(kind, spec, signal.mean(), alpha, reps, seed, workers)


@dataclass
class CoverageResult:
    coverage: float
    mean_width: float
    empty_rate: float
    reps: int

    def __iter__(self):
        yield self.coverage
        yield self.mean_width


def experiment_coverage_1d(spec, level=0.95, reps=1000, seed=0, kind="hcct", workers=1):
    """
    Coverage of ``theta = 0`` by the inverted interval on ``m`` unit-variance
    estimates drawn with correlation ``spec``.

    ``mean_width`` averages over nonempty intervals; empty intervals count
    as non-covering.
    """
    chol = _factor(spec)

    def one(i):
        x = _draw(rng_for(seed, i), 1, spec, chol)[0]
        ci = invert_1d([StudySummary1D(float(v), 1.0) for v in x], kind, None, level)
        return (0.0 in ci), ci.is_empty, ci.width

    res = _map_reps(one, reps, workers)
    cov = np.array([r[0] for r in res], dtype=float)
    emp = np.array([r[1] for r in res], dtype=bool)
    wid = np.array([r[2] for r in res])
    mw = float(wid[~emp].mean()) if np.any(~emp) else np.nan
    return CoverageResult(float(cov.mean()), mw, float(emp.mean()), reps)


def experiment_dac(dist, d, n, d0, rho, level=0.95, reps=300, seed=0, kind="hcct", workers=1):
    """
    Coverage of the true mean by the divide-and-combine region.

    Rows are ``N(0, Sigma)`` (``dist="normal"``) or ``exp`` of such rows
    (``dist="lognormal"``, true mean ``e^{1/2}``) with equi-correlation
    ``rho``.
    """
    dist = str(dist).lower()
    if dist not in ("normal", "lognormal"):
        raise DomainError("dist must be 'normal' or 'lognormal'")
    spec = CorrSpec("equi" if rho > 0 else "identity", d, rho)
    truth = np.full(d, np.exp(0.5) if dist == "lognormal" else 0.0)

    def one(i):
        X = _draw(rng_for(seed, i), n, spec, None)
        if dist == "lognormal":
            X = np.exp(X)
        return bool(dac_covers(X, d0, truth, kind, level))

    return float(np.mean(_map_reps(one, reps, workers)))


@dataclass
class NetmetaCoverage:
    hcct: float
    wls: float
    hcct_drop_rate: float
    reps: int


def experiment_netmeta(rho, reps=300, seed=0, level=0.95, theta=None, se=0.1, workers=1):
    """
    Simultaneous coverage on the synthetic network.

    HCCT coverage is the rate at which the truth lies in the joint region;
    this implies coverage of every projected interval, so it bounds the
    simultaneous coverage of any family of comparisons from below.  The
    region is only fitted when the truth fails the full-weight test, since
    otherwise the region is nonempty and no study is dropped.  WLS
    coverage requires all Bonferroni intervals over treatment-vs-reference
    and treatment-vs-treatment comparisons to cover.
    """
    from . import netmeta

    if theta is None:
        theta = np.tile([0.0, -0.5, -1.0], 3)
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    B = np.array([b for _, _, b in netmeta.pairwise_directions(d)])

    def one(i):
        cs = netmeta.semi_synthetic(theta, rho, seed, i, se=se)
        Omega, _ = netmeta.build_design(cs, "placebo")
        subs = [SubStudy([c.te], [[c.se ** 2]], Omega[j:j + 1]) for j, c in enumerate(cs)]
        model = ScoreModel(subs, "hcct", None)
        drop = False
        if model(theta) <= model.threshold(level):
            # the region is nonempty, so no study is dropped and theta is inside
            ok_h = True
        else:
            h = netmeta.hcct_fit(cs, "placebo", level)
            ok_h = (not h.region.is_empty) and h.region.contains(theta)
            drop = len(h.dropped) > 0
        w = netmeta.wls_fit(cs, "placebo")
        cis = netmeta.wls_simultaneous(w, level, B)
        ok_w = all(float(b @ theta) in ci for b, ci in zip(B, cis))
        return ok_h, ok_w, drop

    res = _map_reps(one, reps, workers)
    a = np.array(res, dtype=float)
    return NetmetaCoverage(float(a[:, 0].mean()), float(a[:, 1].mean()),
                           float(a[:, 2].mean()), reps)
