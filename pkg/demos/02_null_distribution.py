"""
The exact null distribution of the combination statistic.

Under independent uniform p-values the HCCT statistic is a weighted sum of
Half-Cauchy variables.  Its CDF comes from numerically inverting the
Laplace transform.  For many studies the sum is close to a Landau law
after a centering that depends on the weights.
"""
import time

from heavytail.nulldist import NullDistribution, Weights, hybrid_center

for m in (2, 10, 100, 1000):
    w = Weights.equal(m).values
    exact = NullDistribution("hc", w, mode="exact")
    landau = NullDistribution("hc", w, mode="landau")
    t = time.perf_counter()
    c = exact.cdf(10.0)
    dt = time.perf_counter() - t
    print(f"m={m:5d}  CDF(10): exact {c:.9f}  Landau {landau.cdf(10.0):.9f}  "
          f"({dt * 1e3:.0f} ms)  center {hybrid_center(exact):.3f}")

print("\nthe 95% quantile grows slowly with m (exact mode)")
for m in (2, 5, 26, 100):
    print(f"  m={m:3d}: {NullDistribution('hc', Weights.equal(m).values).quantile(0.95):.3f}")

print("\nupper tail: P(T > t) is about that of a single Half-Cauchy, whatever the weights")
for w in ([0.2] * 5, [0.6, 0.1, 0.1, 0.1, 0.1]):
    nd = NullDistribution("hc", w)
    print(f"  weights {w}: sf(1e4) * 1e4 * pi / 2 = {nd.sf(1e4) * 1e4 * 3.141592653589793 / 2:.5f}")
