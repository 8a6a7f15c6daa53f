import math

import numpy as np
import pytest
from scipy import special, stats

from geotweedie import DomainError, KlEstimate, ModelSpec, kl_curve, kl_estimate


def gamma_to_inverse_gaussian_kl(m, phi):
    """KL(gamma || inverse Gaussian), both with mean m and dispersion phi."""
    k, s = 1.0 / phi, m * phi
    e_log = special.digamma(k) + math.log(s)
    e_inv = 1.0 / (s * (k - 1.0))
    e_quad = m - 2.0 * m + m * m * e_inv  # E[(y - m)^2 / y]
    e_log_ig = -0.5 * math.log(2 * math.pi * phi) - 1.5 * e_log - e_quad / (2 * phi * m * m)
    return -stats.gamma(k, scale=s).entropy() - e_log_ig


class TestKlEstimate:
    def test_identical_models(self):
        spec = ModelSpec.tweedie(1.5, 1, 1)
        est = kl_estimate(spec, spec, 1000, 0)
        assert est == KlEstimate(0.0, 0.0, 1000)

    def test_closed_form_gamma_vs_inverse_gaussian(self):
        parent = ModelSpec.tweedie(2, 1.0, 0.5)
        est = kl_estimate(parent, parent.replace(power=3), 100_000, 1)
        exact = gamma_to_inverse_gaussian_kl(1.0, 0.5)
        assert abs(est.value - exact) < 3 * est.std_error
        assert est.excluded == 0

    def test_nonnegative_and_positive_error(self):
        parent = ModelSpec.tweedie(1.5, 1, 1)
        est = kl_estimate(parent, parent.replace(power=1.7), 20_000, 2)
        assert est.value > 0 and est.std_error > 0
        assert est.draw_count == 20_000

    def test_deterministic(self):
        parent = ModelSpec.tweedie(2.5, 1, 1)
        a = kl_estimate(parent, parent.replace(power=2.6), 5_000, 9)
        b = kl_estimate(parent, parent.replace(power=2.6), 5_000, 9)
        assert a == b

    def test_geometric_family(self):
        parent = ModelSpec.geometric(1.2, 1.5, 1.0)
        est = kl_estimate(parent, parent.replace(power=1.5), 5_000, 0)
        assert est.value > 0

    def test_regime_mismatch(self):
        with pytest.raises(DomainError):
            kl_estimate(ModelSpec.tweedie(1.5, 1, 1), ModelSpec.tweedie(2.0, 1, 1))

    def test_family_mismatch(self):
        with pytest.raises(DomainError):
            kl_estimate(ModelSpec.tweedie(2, 1, 1), ModelSpec.geometric(2, 1, 1))


class TestKlCurve:
    def test_zero_offset(self):
        (eps, est), = kl_curve(1.5, [0.0], draw_count=1000)
        assert eps == 0.0 and est.value == 0.0

    def test_grows_with_offset(self):
        curve = kl_curve(1.2, [0.05, 0.2, 0.4], draw_count=20_000, rng_seed=3)
        values = [est.value for _, est in curve]
        assert values[0] < values[1] < values[2]

    def test_seed_per_point(self):
        a = kl_curve(2.5, [0.1, 0.2], draw_count=2_000, rng_seed=5)
        b = kl_curve(2.5, [0.2], draw_count=2_000, rng_seed=6)
        assert a[1][1] == b[0][1]

    def test_offsets_outside_regime(self):
        with pytest.raises(DomainError, match="0.6"):
            kl_curve(1.5, [0.1, 0.6])
