"""Gamma against geometric gamma on the air-conditioning failure times.

Run with ``python3 demos/airplane.py``.
"""
from geotweedie import AIRPLANE, Criterion, fit
from geotweedie.inference import decide

y = AIRPLANE.array()
print(f"{y.size} intervals, mean {y.mean():.2f}")

fits = [fit(("tw", 2.0), y), fit(("gtw", 2.0), y)]
for f in fits:
    s = f.spec
    print(f"{s.family.value:>4} p={s.power.p:g}  m={s.mean:.3f}  phi={s.dispersion:.5g}  "
          f"loglik={f.log_likelihood:.4f}  ksd={f.ksd:.5f}  converged={f.converged}")

lrt = decide(fits, Criterion.LRT)
print(f"LRT statistic {lrt.statistic:.4f} -> {lrt.winner.spec.label()}")
print(f"KSD -> {decide(fits, Criterion.KSD).winner.spec.label()}")
# The geometric fit drifts to phi -> 0, i.e. the plain exponential, which is
# why its profile reports converged=False.
