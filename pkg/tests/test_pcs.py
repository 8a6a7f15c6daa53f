import numpy as np
import pytest

from geotweedie import DomainError, ModelSpec, PcsTable, Scenario, run_grid, run_scenario
from geotweedie import pcs as pcs_module
from geotweedie.pcs import CSV_COLUMNS, parse_scenario_text, replicate_rng


def small(**kw):
    base = dict(parent=ModelSpec.tweedie(1.2, 1.5, 2.0), alternatives=("tw:1.5",),
                sample_size=30, replicates=8, criterion="both", master_seed=11)
    base.update(kw)
    return Scenario(**base)


class TestScenario:
    def test_lrt_needs_one_alternative(self):
        with pytest.raises(DomainError):
            small(alternatives=("tw:1.3", "tw:1.5"))
        assert small(alternatives=("tw:1.3", "tw:1.5"), criterion="ksd").criteria == ("ksd",)

    @pytest.mark.parametrize("kw", [dict(replicates=0), dict(sample_size=1),
                                    dict(alternatives=()), dict(criterion="loglik"),
                                    dict(parent=ModelSpec.tweedie(0, 1, 1))])
    def test_rejects(self, kw):
        with pytest.raises(DomainError):
            small(**kw)

    def test_candidates_start_with_parent(self):
        s = small()
        assert [c.label() for c in s.candidates] == ["tw:1.2", "tw:1.5"]


class TestSeeds:
    def test_replicate_streams_are_independent_of_order(self):
        a = replicate_rng(5, 3).random(4)
        replicate_rng(5, 0).random(100)
        np.testing.assert_array_equal(a, replicate_rng(5, 3).random(4))
        assert not np.array_equal(a, replicate_rng(5, 4).random(4))


class TestRunScenario:
    def test_deterministic(self):
        a = run_scenario(small())
        b = run_scenario(small())
        assert a == b
        assert 0.0 <= a.pcs_lrt <= 1.0 and 0.0 <= a.pcs_ksd <= 1.0

    def test_worker_count_does_not_matter(self):
        s = small(replicates=6)
        assert run_scenario(s, workers=1) == run_scenario(s, workers=2)

    def test_identical_alternative_follows_tie_rules(self):
        row = run_scenario(small(alternatives=("tw:1.2",), replicates=4))
        assert row.pcs_lrt == 0.0  # equal likelihoods hand the win to the alternative
        assert row.pcs_ksd == 1.0  # equal distances keep the lower index

    def test_well_separated_models(self):
        row = run_scenario(small(sample_size=100, replicates=20, criterion="lrt"))
        assert row.pcs_lrt >= 0.9 and row.pcs_ksd is None

    def test_failures_over_budget(self, monkeypatch):
        monkeypatch.setattr(pcs_module, "run_replicate", lambda s, k: None)
        with pytest.raises(pcs_module.ScenarioError):
            run_scenario(small())


class TestGrid:
    def test_single_cell_equals_scenario(self):
        s = small()
        table = run_grid("tw", 1.2, [2.0], [1.5], ["tw:1.5"], [30], replicates=8, master_seed=11)
        assert table.rows == (run_scenario(s),)

    def test_failed_cell_keeps_grid_going(self, monkeypatch):
        real = pcs_module.run_replicate

        def flaky(s, k):
            return None if s.parent.dispersion == 1.0 else real(s, k)

        monkeypatch.setattr(pcs_module, "run_replicate", flaky)
        table = run_grid("tw", 1.2, [1.0, 2.0], [1.5], ["tw:1.5"], [20], replicates=3,
                         criterion="lrt")
        assert table.rows[0].error and table.rows[0].pcs_lrt is None
        assert table.rows[1].error is None and table.rows[1].pcs_lrt is not None

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            run_grid("tw", 1.2, [], [1.5], ["tw:1.5"], [20])

    def test_csv_layout(self):
        table = run_grid("tw", 1.2, [2.0], [1.5], ["tw:1.5"], [20, 30], replicates=3)
        lines = table.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 2
        assert lines[1].startswith("tw,1.2,2,1.5,20,tw:1.5,lrt,")
        assert PcsTable().to_csv() == lines[0] + "\n"


class TestScenarioText:
    def test_key_value(self):
        text = """
        # compound Poisson corner
        family = tw
        p = 1.2
        phi = 0.5, 2
        m = 1.5
        n = 20;100
        alternatives = tw:1.3, tw:1.5
        criterion = ksd
        seed = 4
        """
        kw = parse_scenario_text(text)
        assert kw["phis"] == [0.5, 2.0] and kw["sizes"] == [20, 100]
        assert [a.label() for a in kw["alternatives"]] == ["tw:1.3", "tw:1.5"]
        assert kw["master_seed"] == 4 and kw["criterion"] == "ksd"

    def test_json(self):
        kw = parse_scenario_text('{"p": 2, "phi": [3], "m": [2.5], "n": [20], '
                                 '"alternatives": ["gtw:2"]}')
        assert kw["family"] == "tw" and kw["replicates"] == 100 and kw["master_seed"] is None

    def test_errors(self):
        with pytest.raises(DomainError, match="missing"):
            parse_scenario_text("p = 2")
        with pytest.raises(DomainError, match="unknown"):
            parse_scenario_text("p=2\nphi=1\nm=1\nn=20\nalternatives=gtw:2\ncolour=red")
