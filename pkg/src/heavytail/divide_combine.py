"""
Divide-and-combine inference for a multivariate mean.

The d coordinates are split into contiguous blocks; each block yields a
one-sample Hotelling summary on the same observations, and the block
p-values are combined with a dependence-resilient rule.
"""
from dataclasses import dataclass

import numpy as np

from .confregion import ScoreModel, SubStudy, build_region
from .errors import DomainError


@dataclass(frozen=True)
class BlockPlan:
    d: int
    d0: int
    blocks: tuple

    @property
    def m(self):
        return len(self.blocks)


def coordinate_blocks(d, d0):
    """
    Contiguous blocks ``[0, d0), [d0, 2 d0), ...``; the last may be shorter.

    >>> [len(b) for b in coordinate_blocks(5, 2).blocks]
    [2, 2, 1]
    """
    d, d0 = int(d), int(d0)
    if d < 1:
        raise DomainError("d must be positive")
    if not 1 <= d0 <= d:
        raise DomainError(f"d0 must lie in [1, {d}]")
    blocks = tuple(np.arange(s, min(s + d0, d)) for s in range(0, d, d0))
    return BlockPlan(d, d0, blocks)


def _check_samples(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError("samples must be an n x d matrix")
    if X.shape[0] < 3:
        raise DomainError("need at least 3 observations")
    if not np.all(np.isfinite(X)):
        raise DomainError("samples must be finite")
    return X


def substudies_from_samples(X, plan):
    """
    One-sample Hotelling summaries per block.

    For block ``j`` the estimate is the sample mean of its columns, the
    covariance is ``S_j / n`` with ``S_j`` the unbiased sample covariance,
    and the reference has ``n - 1`` degrees of freedom.
    """
    X = _check_samples(X)
    n, d = X.shape
    if d != plan.d:
        raise DomainError(f"plan is for d={plan.d} but samples have d={d}")
    big = max(len(b) for b in plan.blocks)
    # n = big + 1 still defines the Hotelling reference; convexity needs one
    # more observation and is recorded on each SubStudy
    if n < big + 1:
        raise DomainError(f"need n >= {big + 1} observations for blocks of size {big}")
    xbar = X.mean(axis=0)
    out = []
    for j, idx in enumerate(plan.blocks):
        Xb = X[:, idx]
        S = np.atleast_2d(np.cov(Xb, rowvar=False, ddof=1))
        P = np.zeros((len(idx), d))
        P[np.arange(len(idx)), idx] = 1.0
        try:
            out.append(SubStudy(xbar[idx], S / n, P, n - 1))
        except DomainError as exc:
            raise DomainError(f"block {j}: {exc}") from None
    return out


def dac_region(X, d0, kind="hcct", level=0.95, weights=None):
    """Confidence region for the mean of ``X`` from ``d0``-sized coordinate blocks."""
    X = _check_samples(X)
    plan = coordinate_blocks(X.shape[1], d0)
    subs = substudies_from_samples(X, plan)
    return build_region(subs, kind, weights, level)


def dac_covers(X, d0, theta, kind="hcct", level=0.95, weights=None):
    """
    Whether ``theta`` lies in the divide-and-combine region.

    Equivalent to ``contains(dac_region(...), theta)`` without locating the
    point estimate.
    """
    X = _check_samples(X)
    plan = coordinate_blocks(X.shape[1], d0)
    model = ScoreModel(substudies_from_samples(X, plan), kind, weights)
    return model(np.asarray(theta, dtype=float)) <= model.threshold(level)
