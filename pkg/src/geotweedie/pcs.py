"""Replicated simulation of the probability of correct selection (PCS).

Each replicate draws a sample from the parent model, fits the parent's
(family, power) and every alternative at their own profile-likelihood
optimum, and records whether the parent wins.  Replicate ``k`` of every cell
draws from ``SeedSequence(master_seed, spawn_key=(k,))`` so results do not
depend on evaluation order or on the number of worker processes.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, Family, ModelSpec, ScenarioError, TweedieError, as_power
from .inference import Candidate, Criterion, as_candidate, decide, fit, lrt
from .models import model_sample

CSV_COLUMNS = ("family_parent", "p_parent", "phi", "m", "n", "alternative",
               "criterion", "pcs", "failures", "seed")

_BOTH = ("lrt", "ksd")


def _criteria(value) -> tuple:
    key = str(getattr(value, "value", value)).strip().lower()
    if key == "both":
        return _BOTH
    Criterion.parse(key)
    if key not in _BOTH:
        raise DomainError(f"PCS runs use lrt, ksd or both; got {value!r}")
    return (key,)


@dataclass(frozen=True)
class Scenario:
    """One simulation cell.

    Parameters
    ----------
    parent : ModelSpec
    alternatives : tuple of Candidate
        Exactly one when the likelihood-ratio rule is requested.
    sample_size : int
    replicates : int
    criterion : {"lrt", "ksd", "both"}
    master_seed : int
    """

    parent: ModelSpec
    alternatives: tuple
    sample_size: int
    replicates: int = 100
    criterion: str = "both"
    master_seed: int = 0

    def __post_init__(self):
        alts = tuple(as_candidate(a) for a in self.alternatives)
        object.__setattr__(self, "alternatives", alts)
        crit = _criteria(self.criterion)
        object.__setattr__(self, "criterion", "both" if crit == _BOTH else crit[0])
        if not alts:
            raise DomainError("a scenario needs at least one alternative")
        if "lrt" in crit and len(alts) != 1:
            raise DomainError("the likelihood-ratio rule needs exactly one alternative")
        if int(self.replicates) < 1:
            raise DomainError("replicates must be at least 1")
        if int(self.sample_size) < 2:
            raise DomainError("sample_size must be at least 2")
        if not self.parent.p > 1:
            raise DomainError("PCS simulation needs a parent with p > 1")
        object.__setattr__(self, "replicates", int(self.replicates))
        object.__setattr__(self, "sample_size", int(self.sample_size))
        object.__setattr__(self, "master_seed", int(self.master_seed))

    @property
    def criteria(self) -> tuple:
        return _criteria(self.criterion)

    @property
    def candidates(self) -> tuple:
        return (Candidate(self.parent.family, self.parent.power),) + self.alternatives


@dataclass(frozen=True)
class PcsRow:
    scenario: Scenario
    pcs_lrt: float | None
    pcs_ksd: float | None
    failures: int
    error: str | None = None

    def pcs(self, criterion: str):
        return self.pcs_lrt if criterion == "lrt" else self.pcs_ksd


@dataclass(frozen=True)
class PcsTable:
    rows: tuple = field(default_factory=tuple)

    def to_csv(self, precision: int = 6) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            s = row.scenario
            alt = ";".join(a.label() for a in s.alternatives)
            for crit in s.criteria:
                value = row.pcs(crit)
                writer.writerow([
                    s.parent.family.value, f"{s.parent.p:g}", f"{s.parent.dispersion:g}",
                    f"{s.parent.mean:g}", s.sample_size, alt, crit,
                    "" if value is None else f"{value:.{precision}g}",
                    row.failures, s.master_seed,
                ])
        return buf.getvalue()


def replicate_rng(master_seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(k),)))


def run_replicate(scenario: Scenario, k: int):
    """Outcome of replicate ``k``: ``{criterion: parent_won}`` or None on failure."""
    rng = replicate_rng(scenario.master_seed, k)
    try:
        y = model_sample(scenario.parent, scenario.sample_size, rng)
        need_ksd = "ksd" in scenario.criteria
        fits = [fit(cand, y, compute_ksd=need_ksd) for cand in scenario.candidates]
    except TweedieError:
        return None
    out = {}
    for crit in scenario.criteria:
        if crit == "lrt":
            out[crit] = lrt(fits[0], fits[1]).winner_index == 0
        else:
            out[crit] = decide(fits, Criterion.KSD).winner_index == 0
    return out


def _chunk_worker(args):
    scenario, ks = args
    return [run_replicate(scenario, k) for k in ks]


def _summarise(scenario: Scenario, outcomes) -> PcsRow:
    failures = sum(o is None for o in outcomes)
    if failures > scenario.replicates / 10:
        raise ScenarioError(
            f"{failures} of {scenario.replicates} replicates failed for "
            f"{scenario.parent.label()} (m={scenario.parent.mean:g}, "
            f"phi={scenario.parent.dispersion:g}, n={scenario.sample_size})")
    good = [o for o in outcomes if o is not None]
    values = {}
    for crit in scenario.criteria:
        values[crit] = (sum(o[crit] for o in good) / len(good)) if good else None
    return PcsRow(scenario, values.get("lrt"), values.get("ksd"), failures)


def _run_many(scenarios, workers: int, progress):
    """Outcomes for every replicate of every scenario, reduced by index."""
    tasks = []
    for si, s in enumerate(scenarios):
        ks = list(range(s.replicates))
        step = max(1, len(ks) // 4) if workers > 1 else len(ks)
        for start in range(0, len(ks), step):
            tasks.append((si, (s, ks[start:start + step])))
    results = [[None] * s.replicates for s in scenarios]
    done = [0] * len(scenarios)

    def record(si, ks, outs):
        for k, o in zip(ks, outs):
            results[si][k] = o
        done[si] += len(ks)
        if progress and done[si] == scenarios[si].replicates:
            s = scenarios[si]
            progress(f"cell {si + 1}/{len(scenarios)}: {s.parent.label()} "
                     f"m={s.parent.mean:g} phi={s.parent.dispersion:g} n={s.sample_size} done")

    if workers <= 1:
        for si, payload in tasks:
            record(si, payload[1], _chunk_worker(payload))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = pool.map(_chunk_worker, [payload for _, payload in tasks])
            for (si, payload), o in zip(tasks, outs):
                record(si, payload[1], o)
    return results


def run_scenario(scenario: Scenario, workers: int = 1, progress=None) -> PcsRow:
    """Estimate PCS for one cell.

    Raises
    ------
    ScenarioError
        When more than a tenth of the replicates failed.
    """
    return _summarise(scenario, _run_many([scenario], workers, progress)[0])


def run_grid(family, p, phis, means, alternatives, sizes, replicates: int = 100,
             criterion="both", master_seed: int = 0, workers: int = 1,
             progress=None) -> PcsTable:
    """One :func:`run_scenario` row per (phi, m, n) cell.

    A failing cell yields a row with no PCS values and the error text; the
    remaining cells still run.
    """
    power = as_power(p)
    family = Family.parse(family)
    scenarios = [
        Scenario(ModelSpec(family, power, m, phi), tuple(alternatives), n,
                 replicates, criterion, master_seed)
        for phi, m, n in itertools.product(phis, means, sizes)
    ]
    if not scenarios:
        raise DomainError("the grid is empty")
    rows = []
    for s, outs in zip(scenarios, _run_many(scenarios, workers, progress)):
        try:
            rows.append(_summarise(s, outs))
        except ScenarioError as exc:
            rows.append(PcsRow(s, None, None, sum(o is None for o in outs), str(exc)))
    return PcsTable(tuple(rows))


# ---------------------------------------------------------------------------
# scenario files


def _as_list(value, cast):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    text = str(value).replace(";", ",")
    return [cast(v) for v in text.split(",") if v.strip()]


def parse_scenario_text(text: str) -> dict:
    """Read a JSON object or ``key = value`` lines into grid keyword arguments.

    Keys: ``family``, ``p``, ``phi``, ``m``, ``n`` (lists allowed),
    ``alternatives``, ``replicates``, ``criterion``, ``seed``.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        raw = json.loads(stripped)
    else:
        raw = {}
        for line in stripped.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"expected key = value, got {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    known = {"family", "p", "phi", "m", "n", "alternatives", "replicates",
             "criterion", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise DomainError(f"unknown scenario keys: {sorted(unknown)}")
    missing = {"p", "phi", "m", "n", "alternatives"} - set(raw)
    if missing:
        raise DomainError(f"scenario is missing {sorted(missing)}")
    return dict(
        family=str(raw.get("family", "tw")),
        p=float(raw["p"]),
        phis=_as_list(raw["phi"], float),
        means=_as_list(raw["m"], float),
        sizes=_as_list(raw["n"], int),
        alternatives=[Candidate.parse(a.strip()) for a in _as_list(raw["alternatives"], str)],
        replicates=int(raw.get("replicates", 100)),
        criterion=str(raw.get("criterion", "both")),
        master_seed=int(raw["seed"]) if "seed" in raw else None,
    )


def stderr_progress(message: str):
    print(message, file=sys.stderr, flush=True)
