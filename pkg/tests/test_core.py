import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geotweedie import (
    POISSON_ALPHA,
    DomainError,
    Family,
    ModelSpec,
    PowerParam,
    Support,
    kappa_of_mean,
    matched_geometric_dispersion,
    theta_of_mean,
    variation_index,
    zero_mass,
)
from geotweedie.geometric import geom_zero_mass

powers = st.floats(1.01, 4.0).filter(lambda p: abs(p - 2.0) > 1e-3)
positive = st.floats(0.05, 20.0)


class TestPowerParam:
    @pytest.mark.parametrize("p", [0.1, 0.5, 0.999])
    def test_gap_rejected(self, p):
        with pytest.raises(DomainError):
            PowerParam(p)

    def test_alpha(self):
        assert PowerParam(3).alpha == pytest.approx(0.5)
        assert PowerParam(1.5).alpha == pytest.approx(-1.0)
        assert PowerParam(1).alpha is POISSON_ALPHA
        assert PowerParam(0).alpha == 2.0

    @pytest.mark.parametrize("p, kind, atom", [
        (-1.0, Support.REAL_LINE, False),
        (0.0, Support.REAL_LINE, False),
        (1.0, Support.NONNEGATIVE_INTEGERS, True),
        (1.5, Support.NONNEGATIVE_REALS, True),
        (2.0, Support.POSITIVE_REALS, False),
        (3.5, Support.POSITIVE_REALS, False),
    ])
    def test_support_table(self, p, kind, atom):
        s = PowerParam(p).support
        assert s.kind is kind
        assert s.zero_atom is atom

    def test_support_contains(self):
        assert PowerParam(1.5).support.contains(0.0)
        assert not PowerParam(2).support.contains(0.0)
        assert PowerParam(1).support.contains(3.0)
        assert not PowerParam(1).support.contains(2.5)
        assert not PowerParam(-1).support.contains(math.inf)


class TestModelSpec:
    def test_rejects_bad_values(self):
        with pytest.raises(DomainError):
            ModelSpec.tweedie(1.5, 1.0, 0.0)
        with pytest.raises(DomainError):
            ModelSpec.tweedie(1.5, -1.0, 1.0)
        with pytest.raises(DomainError):
            ModelSpec.tweedie(0.5, 1.0, 1.0)

    def test_gaussian_mean_may_be_negative(self):
        assert ModelSpec.tweedie(0, -3.0, 1.0).mean == -3.0

    def test_family_parsing_and_label(self):
        spec = ModelSpec("gtw", 1.5, 1.0, 2.0)
        assert spec.family is Family.GEOMETRIC
        assert spec.label() == "gtw:1.5"
        with pytest.raises(DomainError):
            Family.parse("weibull")


class TestCumulants:
    def test_theta_examples(self):
        assert theta_of_mean(2, 1.0) == -1.0
        assert theta_of_mean(1, 1.0) == 0.0
        assert theta_of_mean(1.5, 4.0) == pytest.approx(-1.0)

    def test_kappa_examples(self):
        assert kappa_of_mean(2, 1.0) == 0.0
        assert kappa_of_mean(3, 2.0) == pytest.approx(-0.5)
        assert kappa_of_mean(1.5, 1.0) == pytest.approx(2.0)

    @settings(max_examples=20, deadline=None)
    @given(powers, positive)
    def test_theta_derivative(self, p, m):
        h = 1e-6 * m
        fd = (theta_of_mean(p, m + h) - theta_of_mean(p, m - h)) / (2 * h)
        assert fd == pytest.approx(m ** (-p), rel=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(powers, positive)
    def test_kappa_prime_recovers_mean(self, p, m):
        # K'(theta) = dK/dm / (dtheta/dm)
        h = 1e-6 * m
        dk = kappa_of_mean(p, m + h) - kappa_of_mean(p, m - h)
        dt = theta_of_mean(p, m + h) - theta_of_mean(p, m - h)
        assert dk / dt == pytest.approx(m, rel=1e-6)


class TestIndices:
    def test_zero_mass_examples(self):
        assert zero_mass(ModelSpec.tweedie(1.5, 1, 1)) == pytest.approx(math.exp(-2), rel=1e-12)
        assert zero_mass(ModelSpec.tweedie(2, 5, 0.3)) == 0.0
        with pytest.raises(DomainError):
            zero_mass(ModelSpec.tweedie(1, 1, 1))

    def test_zero_mass_limits(self):
        assert zero_mass(ModelSpec.tweedie(1.5, 1e-6, 1)) == pytest.approx(1.0, abs=1e-2)
        assert zero_mass(ModelSpec.tweedie(1.5, 1e6, 1)) == 0.0

    def test_geometric_zero_mass_against_mixture_average(self):
        spec = ModelSpec.geometric(1.5, 1, 1)
        x = np.random.default_rng(11).standard_exponential(10**6)
        mc = np.mean(np.exp(-(x * 1.0) ** 0.5 / (0.5 * x ** -0.5 * 1.0)))
        assert zero_mass(spec) == pytest.approx(mc, abs=1e-3)
        assert zero_mass(spec) == geom_zero_mass(spec)

    def test_variation_index_examples(self):
        assert variation_index(ModelSpec.tweedie(2, 7, 1.3)) == pytest.approx(1.3)
        assert variation_index(ModelSpec.geometric(2, 7, 0.3)) == pytest.approx(1.3)
        assert variation_index(ModelSpec.geometric(1.4, 1, 1e-12)) == pytest.approx(1.0)

    @settings(max_examples=50, deadline=None)
    @given(powers, positive, positive)
    def test_over_variation_criterion(self, p, m, phi):
        vi = variation_index(ModelSpec.tweedie(p, m, phi))
        boundary = m ** (2 - p)
        if abs(phi - boundary) > 1e-9 * boundary:
            assert (vi > 1) == (phi > boundary)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1.001, 50.0), positive)
    def test_gamma_geometric_match(self, phi, m):
        a = variation_index(ModelSpec.tweedie(2, m, phi))
        b = variation_index(ModelSpec.geometric(2, m, matched_geometric_dispersion(phi)))
        assert a == pytest.approx(b, rel=1e-12)

    def test_matched_dispersion(self):
        assert matched_geometric_dispersion(1.2317) == pytest.approx(0.2317)
        assert matched_geometric_dispersion(2) == 1
        with pytest.raises(DomainError):
            matched_geometric_dispersion(1)
