"""Probability of correct selection for one simulation cell, with KL context.

Parent Tw_1.2(m=1.5, phi=2) against Tw_1.5, growing n. Takes about a minute.
"""
from geotweedie import ModelSpec, Scenario, kl_estimate, run_scenario

parent = ModelSpec.tweedie(1.2, 1.5, 2.0)
alt = parent.replace(power=1.5)
kl = kl_estimate(parent, alt, 50_000, rng_seed=1)
print(f"KL(parent || alternative) = {kl.value:.4f} +- {kl.std_error:.4f}")

for n in (20, 40, 60):
    row = run_scenario(Scenario(parent, ("tw:1.5",), n, 50, "both", master_seed=7), workers=2)
    print(f"n={n:3d}  PCS_LRT={row.pcs_lrt:.2f}  PCS_KSD={row.pcs_ksd:.2f}  "
          f"failures={row.failures}")
