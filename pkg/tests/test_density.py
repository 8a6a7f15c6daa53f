import math

import numpy as np
import pytest
from scipy import stats

from geotweedie import (
    DomainError,
    ModelSpec,
    SeriesPolicy,
    a_series,
    cdf,
    density,
    quantile,
    sample,
    tweedie_cdf,
    tweedie_logpdf,
)

# 50-digit series sums from tests/oracles.py, keyed by (p, m, phi, x)
TW_FROZEN = {
    (1.2, 1.0, 1.0, 0.5): 0.39392381677842553, (1.2, 1.0, 1.0, 1.0): 0.3721180770185094,
    (1.2, 1.0, 1.0, 2.0): 0.17259598064583173, (1.2, 1.5, 0.7, 0.5): 0.3574372470485908,
    (1.2, 1.5, 0.7, 1.0): 0.39105880937432613, (1.2, 1.5, 0.7, 2.0): 0.2749438195801854,
    (1.5, 1.0, 1.0, 0.5): 0.476926876972594, (1.5, 1.0, 1.0, 1.0): 0.3575016790048707,
    (1.5, 1.0, 1.0, 2.0): 0.15640119832636357, (1.5, 1.5, 0.7, 0.5): 0.38512919793520406,
    (1.5, 1.5, 0.7, 1.0): 0.39416163739299076, (1.5, 1.5, 0.7, 2.0): 0.2481162176841934,
    (2.2, 1.0, 1.0, 0.5): 0.6591867527783076, (2.2, 1.0, 1.0, 1.0): 0.37387383348979386,
    (2.2, 1.0, 1.0, 2.0): 0.1289090708650838, (2.2, 1.5, 0.7, 0.5): 0.5291417620596087,
    (2.2, 1.5, 0.7, 1.0): 0.4125466857301514, (2.2, 1.5, 0.7, 2.0): 0.1987925572686063,
    (2.5, 1.0, 1.0, 0.5): 0.7396218441893754, (2.5, 1.0, 1.0, 1.0): 0.3832502993103749,
    (2.5, 1.0, 1.0, 2.0): 0.12073119117060278, (2.5, 1.5, 0.7, 0.5): 0.596627030334544,
    (2.5, 1.5, 0.7, 1.0): 0.4228106873256719, (2.5, 1.5, 0.7, 2.0): 0.183107477206742,
}

IG_CDF_1_1_1 = 0.6681020012231706


class TestSeriesPolicy:
    def test_defaults(self):
        pol = SeriesPolicy()
        assert pol.rel_tol == 1e-12 and pol.max_terms == 20_000

    @pytest.mark.parametrize("kw", [dict(rel_tol=0.0), dict(rel_tol=0.1), dict(max_terms=50)])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            SeriesPolicy(**kw)


class TestASeries:
    def test_inverse_gaussian_closed_form(self):
        # (2 pi phi x^3)^(-1/2) exp(-1/(2 phi x)) at x = 1/2, phi = 1
        expected = (2 * math.pi * 0.125) ** -0.5 * math.exp(-1.0)
        assert a_series(3, 0.5, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_gaussian(self):
        assert a_series(0, 0.0, 1.0) == pytest.approx(0.3989422804014327, rel=1e-12)
        assert a_series(0, 1.0, 1.0) == pytest.approx(0.24197072451914337, rel=1e-12)

    def test_indicator_at_zero(self):
        assert a_series(1.5, 0.0, 2.0) == 1.0

    @pytest.mark.parametrize("x", [0.05, 0.5, 2.0, 9.0])
    @pytest.mark.parametrize("phi", [0.3, 1.0, 4.0])
    def test_p3_series_matches_closed_form(self, x, phi):
        closed = a_series(3, x, phi)
        summed = a_series(3, x, phi, use_closed_form=False)
        np.testing.assert_allclose(summed, closed, rtol=1e-10)

    def test_support_violation(self):
        with pytest.raises(DomainError):
            a_series(2.5, 0.0, 1.0)
        with pytest.raises(DomainError):
            a_series(1.5, -1.0, 1.0)


class TestDensity:
    def test_examples(self):
        assert density(ModelSpec.tweedie(2, 1, 1), 1.0).value == pytest.approx(math.exp(-1), rel=1e-12)
        assert density(ModelSpec.tweedie(0, 0, 1), 0.0).value == pytest.approx(0.3989422804014327)
        atom = density(ModelSpec.tweedie(1.5, 1, 1), 0.0)
        assert atom.is_atom and atom.value == pytest.approx(math.exp(-2), rel=1e-12)

    def test_poisson_mass(self):
        d = density(ModelSpec.tweedie(1, 2.0, 1.0), 3.0)
        assert d.is_atom
        assert d.value == pytest.approx(stats.poisson.pmf(3, 2.0), rel=1e-12)

    def test_off_support_is_zero(self):
        d = density(ModelSpec.tweedie(1.5, 1, 1), -1.0)
        assert d.value == 0.0 and d.log_value == -math.inf

    @pytest.mark.parametrize("key", sorted(TW_FROZEN))
    def test_scalar_matches_oracle(self, key):
        p, m, phi, x = key
        got = density(ModelSpec.tweedie(p, m, phi), x).value
        np.testing.assert_allclose(got, TW_FROZEN[key], rtol=1e-10)

    def test_vectorised_matches_oracle(self):
        keys = sorted(TW_FROZEN)
        for p in sorted({k[0] for k in keys}):
            sub = [k for k in keys if k[0] == p]
            x = np.array([k[3] for k in sub])
            m = np.array([k[1] for k in sub])
            phi = np.array([k[2] for k in sub])
            got = np.exp(tweedie_logpdf(x, p, m, phi))
            np.testing.assert_allclose(got, [TW_FROZEN[k] for k in sub], rtol=1e-10)

    @pytest.mark.parametrize("m, phi", [(0.1, 0.5), (1.0, 1.0), (2.5, 2.0)])
    def test_gamma_and_inverse_gaussian(self, m, phi):
        x = np.geomspace(0.01, 20, 25)
        np.testing.assert_allclose(
            tweedie_logpdf(x, 2, m, phi), stats.gamma.logpdf(x, 1 / phi, scale=m * phi), rtol=1e-11)
        np.testing.assert_allclose(
            tweedie_logpdf(x, 3, m, phi), stats.invgauss.logpdf(x, m * phi, scale=1 / phi), rtol=1e-10)

    def test_extreme_parameters_finite(self):
        lf = tweedie_logpdf(np.array([1e-3, 1.0, 1e3]), 2.5, 1e4, 1e-4)
        assert np.all(np.isfinite(lf))
        lf = tweedie_logpdf(np.array([1e-3, 1.0]), 1.3, 1e-3, 50.0)
        assert np.all(np.isfinite(lf))


class TestCdf:
    def test_exponential_median(self):
        assert cdf(ModelSpec.tweedie(2, 1, 1), math.log(2)) == pytest.approx(0.5, abs=1e-12)

    def test_atom(self):
        assert cdf(ModelSpec.tweedie(1.5, 1, 1), 0.0) == pytest.approx(math.exp(-2), rel=1e-12)

    def test_inverse_gaussian_oracle(self):
        assert cdf(ModelSpec.tweedie(3, 1, 1), 1.0) == pytest.approx(IG_CDF_1_1_1, rel=1e-10)

    @pytest.mark.parametrize("p, m, phi", [(1.3, 1.5, 1.0), (2.5, 1.5, 1.0), (2.2, 0.1, 0.5)])
    def test_monotone_and_bounded(self, p, m, phi):
        F = tweedie_cdf(np.geomspace(1e-4, 50 * m + 10, 60), p, m, phi)
        assert np.all(np.diff(F) >= -1e-13)
        assert F[0] >= 0 and F[-1] == pytest.approx(1.0, abs=1e-8)

    def test_negative_support(self):
        assert tweedie_cdf(-1.0, 1.5, 1.0, 1.0) == 0.0


class TestQuantile:
    def test_exponential(self):
        assert quantile(ModelSpec.tweedie(2, 1, 1), 0.5) == pytest.approx(math.log(2), rel=1e-9)

    def test_inside_atom(self):
        assert quantile(ModelSpec.tweedie(1.5, 1, 1), 0.1) == 0.0

    def test_round_trip(self):
        spec = ModelSpec.tweedie(2.5, 1.5, 1.0)
        assert cdf(spec, quantile(spec, 0.9)) == pytest.approx(0.9, abs=1e-9)

    def test_bad_level(self):
        with pytest.raises(DomainError):
            quantile(ModelSpec.tweedie(2, 1, 1), 1.0)


class TestSample:
    @pytest.mark.parametrize("p, m, phi", [(1.2, 1.5, 2.0), (1.5, 1.0, 1.0), (2.0, 2.5, 3.0),
                                           (2.2, 0.1, 0.5), (2.5, 1.5, 1.0), (3.0, 1.0, 0.5)])
    def test_moments(self, p, m, phi):
        n = 200_000
        y = sample(ModelSpec.tweedie(p, m, phi), n, 123)
        var = phi * m ** p
        np.testing.assert_allclose(y.mean(), m, atol=5 * math.sqrt(var / n))
        np.testing.assert_allclose(y.var(), var, rtol=0.1)

    def test_zero_fraction(self):
        spec = ModelSpec.tweedie(1.5, 1.0, 1.0)
        y = sample(spec, 100_000, 5)
        np.testing.assert_allclose(np.mean(y == 0), math.exp(-2), atol=0.005)

    def test_ks_against_cdf(self):
        spec = ModelSpec.tweedie(2.5, 1.5, 1.0)
        y = sample(spec, 5000, 9)
        res = stats.kstest(y, lambda v: tweedie_cdf(v, 2.5, 1.5, 1.0))
        assert res.pvalue > 1e-3

    def test_positive_support(self):
        y = sample(ModelSpec.tweedie(2.0, 0.1, 3.0), 10_000, 1)
        assert np.all(y > 0)

    def test_empty_and_deterministic(self):
        spec = ModelSpec.tweedie(1.3, 1.0, 1.0)
        assert sample(spec, 0, 1).shape == (0,)
        np.testing.assert_array_equal(sample(spec, 50, 7), sample(spec, 50, 7))

    def test_unsupported_power(self):
        with pytest.raises(DomainError):
            sample(ModelSpec.tweedie(1.0, 1.0, 1.0), 5, 0)
        with pytest.raises(DomainError):
            sample(ModelSpec.tweedie(-1.0, 1.0, 1.0), 5, 0)
