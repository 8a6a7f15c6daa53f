import math

import numpy as np
import pytest

from geotweedie import (
    AIRPLANE,
    PUMPS,
    Analytic,
    Candidate,
    Criterion,
    DomainError,
    EcdfFromSamples,
    FitResult,
    ModelSpec,
    Sample,
    fit,
    ksd,
    log_likelihood,
    lrt,
    quantile,
    select,
)
from geotweedie.inference import decide

# 40-digit Newton solve of the gamma profile score (tests/oracles.py)
AIRPLANE_GAMMA_PHI = 1.2316611680331637
AIRPLANE_GAMMA_LOGLIK = -152.1673307371286


def fake_fit(loglik, distance=0.1):
    return FitResult(ModelSpec.tweedie(2, 1, 1), loglik, distance, True, 1)


class TestSample:
    def test_rejects_short_and_nonfinite(self):
        with pytest.raises(DomainError):
            Sample.of([1.0])
        with pytest.raises(DomainError, match="1"):
            Sample.of([1.0, math.nan, 2.0])

    def test_mean(self):
        assert Sample.of([1, 2, 3]).mean == 2.0


class TestCandidate:
    def test_parse_and_label(self):
        c = Candidate.parse("gtw:1.5")
        assert c.p == 1.5 and c.label() == "gtw:1.5"
        with pytest.raises(DomainError):
            Candidate.parse("tw1.5")


class TestDatasets:
    def test_airplane(self):
        y = AIRPLANE.array()
        assert y.size == 30 and y.sum() == 1788

    def test_pumps(self):
        y = PUMPS.array()
        assert y.size == 61 and np.count_nonzero(y == 0) == 7
        np.testing.assert_allclose(y.mean(), 23.0328, atol=1e-4)

    def test_copies_are_independent(self):
        y = AIRPLANE.array()
        y[0] = -1.0
        assert isinstance(AIRPLANE.values, tuple)
        assert AIRPLANE.array()[0] != -1.0


class TestLogLikelihood:
    def test_exponential_point(self):
        assert log_likelihood(ModelSpec.tweedie(2, 1, 1), [1.0]) == pytest.approx(-1.0)

    def test_atom_contributes_log_mass(self):
        got = log_likelihood(ModelSpec.tweedie(1.5, 1, 1), [0.0, 0.0])
        assert got == pytest.approx(-4.0)

    def test_zero_under_continuous_model(self):
        with pytest.raises(DomainError, match="#1"):
            log_likelihood(ModelSpec.tweedie(2, 1, 1), [1.0, 0.0, 2.0])


class TestFit:
    def test_airplane_gamma_against_oracle(self):
        res = fit("tw:2", AIRPLANE.array())
        assert res.spec.mean == pytest.approx(59.6, abs=1e-12)
        np.testing.assert_allclose(res.spec.dispersion, AIRPLANE_GAMMA_PHI, rtol=1e-5)
        np.testing.assert_allclose(res.log_likelihood, AIRPLANE_GAMMA_LOGLIK, atol=1e-8)
        assert res.converged

    def test_pumps_tw14_table_values(self):
        res = fit("tw:1.4", PUMPS.array(), compute_ksd=False)
        np.testing.assert_allclose(res.spec.dispersion, 4.6439, atol=0.05)
        np.testing.assert_allclose(res.log_likelihood, -245.9001, atol=0.05)
        assert math.isnan(res.ksd)

    def test_pumps_tw16_loglik(self):
        res = fit(("tw", 1.6), PUMPS.array(), compute_ksd=False)
        np.testing.assert_allclose(res.log_likelihood, -250.1159, atol=0.05)

    def test_profile_is_a_maximum(self):
        y = PUMPS.array()
        res = fit("tw:1.5", y, compute_ksd=False)
        for factor in (0.97, 1.03):
            spec = res.spec.replace(dispersion=res.spec.dispersion * factor)
            assert log_likelihood(spec, y) < res.log_likelihood

    def test_geometric_fit_recovers_dispersion(self):
        spec = ModelSpec.geometric(1.3, 2.0, 1.5)
        from geotweedie.models import model_sample
        y = model_sample(spec, 3000, 17)
        res = fit("gtw:1.3", y, compute_ksd=False)
        np.testing.assert_allclose(res.spec.dispersion, 1.5, rtol=0.2)
        assert res.converged

    def test_zeros_rejected_for_continuous(self):
        with pytest.raises(DomainError, match="#"):
            fit("tw:2", PUMPS.array())

    def test_power_must_exceed_one(self):
        with pytest.raises(DomainError):
            fit("tw:0", [1.0, 2.0])


class TestKsd:
    @pytest.mark.parametrize("p", [2.0, 2.5, 1.5])
    def test_quantile_data(self, p):
        spec = ModelSpec.tweedie(p, 1.0, 0.3)
        n = 40
        y = [quantile(spec, (i - 0.5) / n) for i in range(1, n + 1)]
        np.testing.assert_allclose(ksd(spec, y), 0.5 / n, atol=1e-8)

    def test_ties_use_both_limits(self):
        spec = ModelSpec.tweedie(1.5, 1.0, 1.0)
        atom = math.exp(-2.0)
        y = [0.0, 0.0, 0.0, 0.0, 5.0, 6.0, 7.0, 8.0]
        assert ksd(spec, y) >= 0.5 - atom - 1e-12

    def test_ecdf_mode_close_to_analytic(self):
        spec = ModelSpec.tweedie(2, 59.6, 1.2317)
        a = ksd(spec, AIRPLANE.array(), Analytic())
        b = ksd(spec, AIRPLANE.array(), EcdfFromSamples(200_000, 1))
        assert abs(a - b) < 0.01

    def test_bounds(self):
        assert 0.0 <= ksd(ModelSpec.tweedie(2, 1, 1), [100.0, 200.0]) <= 1.0


class TestDecisions:
    def test_lrt_tie_goes_to_second(self):
        out = lrt(fake_fit(-10.0), fake_fit(-10.0))
        assert out.statistic == 0.0 and out.winner_index == 1

    def test_lrt_antisymmetric(self):
        a, b = fake_fit(-10.0), fake_fit(-12.5)
        assert lrt(a, b).statistic == -lrt(b, a).statistic
        assert lrt(a, b).winner is a and lrt(b, a).winner is a

    def test_ksd_tie_goes_to_first(self):
        out = decide([fake_fit(-1, 0.2), fake_fit(-1, 0.2)], Criterion.KSD)
        assert out.winner_index == 0

    def test_lrt_needs_two(self):
        with pytest.raises(DomainError):
            decide([fake_fit(-1)] * 3, "lrt")

    def test_airplane_lrt_prefers_gamma(self):
        out = select(["tw:2", "gtw:2"], AIRPLANE.array(), "lrt")
        assert out.winner_index == 0 and out.statistic > 0

    def test_pumps_loglik_prefers_tw14_over_tw19(self):
        out = select(["tw:1.4", "tw:1.9"], PUMPS.array(), "loglik")
        assert out.winner.spec.p == 1.4

    def test_identical_candidates(self):
        out = select(["tw:2", "tw:2"], AIRPLANE.array(), "ksd")
        assert out.winner_index == 0
