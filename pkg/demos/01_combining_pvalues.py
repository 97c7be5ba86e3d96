"""
Combining p-values from dependent tests.

Fisher and Stouffer assume independent p-values.  The heavy-tailed
combiners (HCCT with a Half-Cauchy transform, EHMP with a Pareto(1,1)
transform) are dominated by the smallest p-values, and that makes them
robust to dependence.
"""
from heavytail import combine, sim
from heavytail.sim import CorrSpec

cases = [(0.02, 0.03, 0.96), (0.02, 0.03, 0.99), (0.015, 0.9, 0.96)]
methods = ("fisher", "stouffer", "bonferroni", "cct", "hcct", "ehmp")

print("global p-values")
print("p-values".ljust(22) + "".join(m.rjust(11) for m in methods))
for p in cases:
    row = "".join(f"{combine.global_pvalue(m, p):11.3f}" for m in methods)
    print(str(p).ljust(22) + row)
# CCT breaks down once one p-value approaches 1: cot(pi p) tends to minus infinity.

print("\ncalibrated 5% thresholds for the weighted statistic")
for w in ([0.5, 0.5], [0.8, 0.2], [0.2] * 5):
    print(f"  weights {w}: HCCT {combine.threshold('hcct', w):.2f}, "
          f"EHMP {combine.threshold('ehmp', w):.2f}")

print("\nfalse positive rate at alpha = 0.05, m = 50, equicorrelated z-scores")
for rho in (0.0, 0.5, 0.9):
    spec = CorrSpec("equi" if rho else "identity", 50, rho)
    rates = {m: sim.experiment_fpr(m, spec, 0.05, reps=1000, seed=1) for m in ("fisher", "hcct")}
    print(f"  rho = {rho}: Fisher {rates['fisher']:.3f}, HCCT {rates['hcct']:.3f}")
