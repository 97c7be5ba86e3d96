"""
Fixed-effects network meta-analysis.

Each two-arm contrast ``zeta_j`` estimates ``omega_j' theta`` where
``theta`` holds the effects of the active treatments against a reference.
The classical estimator is inverse-variance weighted least squares with
Bonferroni-adjusted simultaneous intervals; the HCCT alternative treats
every contrast as a one-dimensional sub-study and needs no independence
assumption between contrasts.
"""
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import linalg, special

from .confregion import (IntervalResult, SubStudy, adaptive_nonempty,
                         simultaneous_ci)
from .errors import ConnectivityError, DomainError, SpanError


@dataclass(frozen=True)
class Contrast:
    """Effect estimate ``te`` of ``treat_a`` minus ``treat_b`` within one study."""
    study: str
    treat_a: str
    treat_b: str
    te: float
    se: float
    df: float = np.inf

    def __post_init__(self):
        if self.treat_a == self.treat_b:
            raise DomainError(f"study {self.study}: a contrast needs two different treatments")
        if not self.se > 0:
            raise DomainError(f"study {self.study}: se must be positive")
        if not np.isfinite(self.te):
            raise DomainError(f"study {self.study}: te must be finite")


@dataclass
class NetworkFit:
    treatments: list
    reference: str
    theta_hat: np.ndarray
    method: str
    L: np.ndarray = None
    region: object = field(default=None, repr=False)
    dropped: list = field(default_factory=list)
    contrasts: list = field(default_factory=list, repr=False)

    @property
    def d(self):
        return len(self.treatments)


def expand_arms(arms):
    """
    All within-study pairwise contrasts from arm-level summaries.

    Parameters
    ----------
    arms : iterable of (study, treatment, mean, sd, n)

    Returns
    -------
    list of Contrast
        Pairs ordered lexicographically by treatment label, with
        ``te = mean_a - mean_b`` and ``se = sqrt(sd_a^2/n_a + sd_b^2/n_b)``.
    """
    by_study = defaultdict(list)
    order = []
    for row in arms:
        study, treat, mean, sd, n = row
        sd, n, mean = float(sd), float(n), float(mean)
        if not sd > 0:
            raise DomainError(f"study {study}: sd must be positive")
        if not n >= 2:
            raise DomainError(f"study {study}: n must be at least 2")
        if study not in by_study:
            order.append(study)
        by_study[study].append((str(treat), mean, sd, n))
    out = []
    for study in order:
        rows = sorted(by_study[study])
        if len(rows) < 2:
            raise DomainError(f"study {study} has a single arm")
        labels = [r[0] for r in rows]
        if len(set(labels)) != len(labels):
            raise DomainError(f"study {study} lists a treatment twice")
        for a, b in combinations(rows, 2):
            te = a[1] - b[1]
            se = np.sqrt(a[2] ** 2 / a[3] + b[2] ** 2 / b[3])
            out.append(Contrast(str(study), a[0], b[0], te, se))
    return out


def default_reference(contrasts):
    labels = {c.treat_a for c in contrasts} | {c.treat_b for c in contrasts}
    return "placebo" if "placebo" in labels else min(labels)


def _components(contrasts):
    adj = defaultdict(set)
    for c in contrasts:
        adj[c.treat_a].add(c.treat_b)
        adj[c.treat_b].add(c.treat_a)
    seen, comps = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def build_design(contrasts, reference=None):
    """
    Design matrix of the network.

    Row ``j`` has +1 in ``treat_a``'s column and -1 in ``treat_b``'s; the
    reference treatment has no column.

    Returns
    -------
    Omega : ndarray, shape (m, d)
    treatments : list of str
        Column labels (sorted, reference excluded).
    """
    contrasts = list(contrasts)
    if not contrasts:
        raise DomainError("no contrasts given")
    if reference is None:
        reference = default_reference(contrasts)
    comps = _components(contrasts)
    labels = sorted(set().union(*comps))
    if reference not in labels:
        raise DomainError(f"reference {reference!r} does not appear in the network")
    if len(comps) > 1:
        raise ConnectivityError(f"network has {len(comps)} disconnected components: {comps}", comps)
    treatments = [t for t in labels if t != reference]
    col = {t: i for i, t in enumerate(treatments)}
    Omega = np.zeros((len(contrasts), len(treatments)))
    for j, c in enumerate(contrasts):
        if c.treat_a in col:
            Omega[j, col[c.treat_a]] += 1.0
        if c.treat_b in col:
            Omega[j, col[c.treat_b]] -= 1.0
    return Omega, treatments


def wls_fit(contrasts, reference=None):
    """Inverse-variance weighted least squares fit, solved through a Cholesky factor."""
    contrasts = list(contrasts)
    if reference is None:
        reference = default_reference(contrasts)
    Omega, treatments = build_design(contrasts, reference)
    te = np.array([c.te for c in contrasts])
    wt = 1.0 / np.array([c.se for c in contrasts]) ** 2
    M = Omega.T @ (wt[:, None] * Omega)
    try:
        cf = linalg.cho_factor(M)
    except linalg.LinAlgError:
        raise DomainError("design is rank deficient")
    theta = linalg.cho_solve(cf, Omega.T @ (wt * te))
    L = linalg.cho_solve(cf, np.eye(len(treatments)))
    L = 0.5 * (L + L.T)
    return NetworkFit(treatments, reference, theta, "wls", L=L, contrasts=contrasts)


def wls_simultaneous(fit, level=0.95, comparisons=None):
    """
    Bonferroni simultaneous intervals ``b' theta +- z sqrt(b' L b)`` with
    ``z = z_{1 - (1 - level) / (2K)}`` for ``K`` comparisons.
    """
    if fit.L is None:
        raise DomainError("wls_simultaneous needs a WLS fit")
    if comparisons is None:
        comparisons = list(np.eye(fit.d))
    B = np.atleast_2d(np.asarray(comparisons, dtype=float))
    K = B.shape[0]
    z = -special.ndtri((1.0 - level) / (2.0 * K))
    out = []
    for b in B:
        c = float(b @ fit.theta_hat)
        h = z * np.sqrt(float(b @ fit.L @ b))
        out.append(IntervalResult.interval(c - h, c + h))
    return out


def contrast_substudies(contrasts, treatments, reference):
    Omega, _ = _design_for(contrasts, treatments, reference)
    return [SubStudy([c.te], [[c.se ** 2]], Omega[j:j + 1], c.df)
            for j, c in enumerate(contrasts)]


def _design_for(contrasts, treatments, reference):
    Omega, tr = build_design(contrasts, reference)
    if tr != list(treatments):
        raise DomainError("treatment labels do not match the design")
    return Omega, tr


def hcct_fit(contrasts, reference=None, level=0.95, kind="hcct", weights=None):
    """
    HCCT (or EHMP) fit of the network.

    Every contrast becomes a sub-study with projection ``omega_j'``.  Empty
    regions trigger the adaptive procedure, which drops the contrast with
    the largest heterogeneity score until the region is nonempty.
    """
    contrasts = list(contrasts)
    if reference is None:
        reference = default_reference(contrasts)
    Omega, treatments = build_design(contrasts, reference)
    subs = [SubStudy([c.te], [[c.se ** 2]], Omega[j:j + 1], c.df)
            for j, c in enumerate(contrasts)]
    try:
        region, dropped = adaptive_nonempty(subs, kind, weights, level)
    except SpanError as exc:
        names = [f"{contrasts[j].study}:{contrasts[j].treat_a}-{contrasts[j].treat_b}"
                 for j in exc.dropped]
        raise SpanError(f"{exc} (treatments {treatments}; drop history {names})",
                        exc.dropped) from None
    theta = region.point_estimate if not region.is_empty else region.argmin
    return NetworkFit(treatments, reference, np.asarray(theta), str(kind).lower(),
                      region=region, dropped=list(dropped), contrasts=contrasts)


def pairwise_directions(d):
    """``e_i`` for every treatment, then ``e_i - e_j`` for ``i < j``."""
    out = [("ref", i, np.eye(d)[i]) for i in range(d)]
    for i, j in combinations(range(d), 2):
        b = np.zeros(d)
        b[i], b[j] = 1.0, -1.0
        out.append(("pair", (i, j), b))
    return out


def all_pairwise_cis(fit, level=None):
    """
    Simultaneous intervals for every treatment comparison.

    Returns
    -------
    labels : list of str
        Reference first, then the treatments.
    M : ndarray of object, shape (d+1, d+1)
        ``M[i, j]`` is the interval for effect(i) - effect(j); the diagonal
        is None.
    """
    if fit.region is None:
        raise DomainError("all_pairwise_cis needs an HCCT/EHMP fit")
    if level is not None and abs(level - fit.region.level) > 1e-12:
        raise DomainError("level differs from the fitted region's level; refit first")
    d = fit.d
    labels = [fit.reference] + list(fit.treatments)
    M = np.empty((d + 1, d + 1), dtype=object)
    for tag, idx, b in pairwise_directions(d):
        ci = simultaneous_ci(fit.region, b)
        i, j = (idx + 1, 0) if tag == "ref" else (idx[0] + 1, idx[1] + 1)
        M[i, j] = ci
        M[j, i] = IntervalResult.empty() if ci.is_empty else IntervalResult.interval(-ci.hi, -ci.lo)
    return labels, M


def synthetic_design():
    """
    A connected 28-contrast design over nine active treatments and placebo.

    Each treatment ``t1..t9`` is compared with placebo twice, and ten
    active-versus-active contrasts link neighbouring treatments.  Used by the
    semi-synthetic experiments and demos.
    """
    names = [f"t{i}" for i in range(1, 10)]
    pairs = [(t, "placebo") for t in names for _ in range(2)]
    links = [(names[i], names[i + 1]) for i in range(8)] + [(names[0], names[4]), (names[2], names[8])]
    return pairs + links


def semi_synthetic(theta, rho, seed=0, replicate=0, se=0.1, design=None):
    """
    Draw contrasts ``zeta = Omega theta + eps`` with
    ``eps ~ N(0, se^2 ((1 - rho) I + rho 1 1'))``.
    """
    from .sim import rng_for

    design = synthetic_design() if design is None else design
    labels = sorted({a for a, _ in design} | {b for _, b in design} - {"placebo"})
    col = {t: i for i, t in enumerate(labels)}
    theta = np.asarray(theta, dtype=float)
    if theta.size != len(labels):
        raise DomainError(f"theta must have {len(labels)} entries")
    m = len(design)
    Omega = np.zeros((m, len(labels)))
    for j, (a, b) in enumerate(design):
        if a in col:
            Omega[j, col[a]] += 1
        if b in col:
            Omega[j, col[b]] -= 1
    rng = rng_for(seed, replicate)
    z0 = rng.standard_normal()
    z = rng.standard_normal(m)
    eps = se * (np.sqrt(rho) * z0 + np.sqrt(1 - rho) * z)
    te = Omega @ theta + eps
    return [Contrast(f"s{j + 1}", a, b, float(te[j]), se) for j, (a, b) in enumerate(design)]
