"""Power selection for the pump failure counts, which contain exact zeros.

Both families are fitted over p = 1.1 .. 1.9; only the compound Poisson
range can carry the zeros.
"""
import numpy as np

from geotweedie import PUMPS, Criterion, fit
from geotweedie.inference import decide

POWERS = np.round(np.arange(1.1, 1.91, 0.1), 1)

y = PUMPS.array()
print(f"n={y.size}, zeros={np.sum(y == 0)}")

tw = [fit(("tw", p), y) for p in POWERS]
gtw = [fit(("gtw", p), y, compute_ksd=False) for p in POWERS]

print(" p      phi_tw   loglik_tw   ksd_tw   phi_gtw  loglik_gtw")
for p, a, b in zip(POWERS, tw, gtw):
    print(f"{p:.1f} {a.spec.dispersion:9.4f} {a.log_likelihood:11.4f} {a.ksd:8.4f} "
          f"{b.spec.dispersion:9.4f} {b.log_likelihood:11.4f}")

for name, fits, crit in (("Tw by KSD", tw, Criterion.KSD),
                         ("Tw by loglik", tw, Criterion.LOGLIK),
                         ("GTw by loglik", gtw, Criterion.LOGLIK)):
    print(f"{name:>14}: {decide(fits, crit).winner.spec.label()}")
