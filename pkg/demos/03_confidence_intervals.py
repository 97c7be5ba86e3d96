"""
Confidence intervals by inverting a combination test.

Two studies estimate the same parameter as 0.125 and -0.125 with standard
error 0.1.  Inverting the Cauchy combination test gives three disjoint
pieces.  HCCT gives one interval, because its score is convex in theta.
When the studies disagree strongly the interval is empty, and the adaptive
procedure drops the most outlying study.
"""
from heavytail.confregion import (StudySummary1D, adaptive_nonempty, cct_invert_grid,
                                  invert_1d, lower_bound_stat)

studies = [StudySummary1D(0.125, 0.1), StudySummary1D(-0.125, 0.1)]
print("CCT   :", " U ".join(f"[{a:.4f}, {b:.4f}]" for a, b in cct_invert_grid(studies)))
ci = invert_1d(studies, "hcct")
print(f"HCCT  : [{ci.lo:.4f}, {ci.hi:.4f}]")
ci = invert_1d(studies, "ehmp")
print(f"EHMP  : [{ci.lo:.4f}, {ci.hi:.4f}]")

print("\nsmall-sample studies use Student-t p-values")
t_studies = [StudySummary1D(0.125, 0.1, df=8), StudySummary1D(-0.125, 0.1, df=12)]
ci = invert_1d(t_studies)
print(f"HCCT  : [{ci.lo:.4f}, {ci.hi:.4f}]")

print("\nfour consistent studies and one outlier")
s = [StudySummary1D(v, 0.1) for v in (0.0, 0.05, -0.05, 0.02, 5.0)]
ci = invert_1d(s)
print("plain    :", ci.status, f"(score lower bound {lower_bound_stat(s):.1f})")
region, dropped = adaptive_nonempty(s)
ci = invert_1d(s, w=region.weights)
print(f"adaptive : [{ci.lo:.4f}, {ci.hi:.4f}] after dropping studies {dropped}")
