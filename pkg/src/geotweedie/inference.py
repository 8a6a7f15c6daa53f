"""Profile-likelihood fitting at a fixed power and model discrimination.

Fitting fixes the mean at the sample mean and maximises the log-likelihood
over the dispersion.  Discrimination compares fitted candidates either by the
log-ratio of their maximised likelihoods or by their Kolmogorov-Smirnov
distance to the empirical distribution.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core import (DomainError, Family, ModelSpec, PowerParam,
                   SelectionError, TweedieError, as_power)
from .models import model_cdf, model_logpdf, model_sample

_BRACKET_DECADES = 3.0
_MAX_EXPANSIONS = 5
_MAX_LOG_OFFSET = 30.0
_LOG_TOL = 1e-6
_EDGE = 1e-3
_FLAT_TOL = 1e-8


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class Sample:
    """Observed values ``Y_1..Y_n`` (``n >= 2``, all finite)."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 2:
            raise DomainError("a sample needs at least two observations")
        if not np.all(np.isfinite(v)):
            bad = np.flatnonzero(~np.isfinite(v)).tolist()
            raise DomainError(f"non-finite observations at indices {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @classmethod
    def of(cls, data) -> "Sample":
        return data if isinstance(data, cls) else cls(data)


@dataclass(frozen=True)
class Candidate:
    """A (family, power) pair to be fitted."""

    family: Family
    power: PowerParam

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "power", as_power(self.power))

    @property
    def p(self) -> float:
        return self.power.p

    @classmethod
    def parse(cls, text: str) -> "Candidate":
        """Parse ``family:p``, e.g. ``tw:1.5`` or ``gtw:2``."""
        try:
            fam, p = text.split(":")
            return cls(fam, float(p))
        except ValueError:
            raise DomainError(f"cannot parse candidate {text!r}; expected family:p") from None

    def label(self) -> str:
        return f"{self.family.value}:{self.p:g}"


def as_candidate(c) -> Candidate:
    if isinstance(c, Candidate):
        return c
    if isinstance(c, ModelSpec):
        return Candidate(c.family, c.power)
    if isinstance(c, str):
        return Candidate.parse(c)
    family, power = c
    return Candidate(family, power)


class Analytic:
    """Use the model's numerical distribution function."""

    def __repr__(self):
        return "Analytic()"

    def __eq__(self, other):
        return isinstance(other, Analytic)

    def __hash__(self):
        return hash("Analytic")


@dataclass(frozen=True)
class EcdfFromSamples:
    """Replace the model CDF by the empirical CDF of ``count`` model draws."""

    count: int = 100_000
    seed: int = 0


class Criterion(enum.Enum):
    LRT = "lrt"
    KSD = "ksd"
    LOGLIK = "loglik"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown criterion {value!r}") from None


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    log_likelihood: float
    ksd: float
    converged: bool
    dispersion_search_evals: int


@dataclass(frozen=True)
class SelectionOutcome:
    winner_index: int
    criterion: Criterion
    statistic: float
    per_candidate: tuple

    @property
    def winner(self) -> FitResult:
        return self.per_candidate[self.winner_index]


# ---------------------------------------------------------------------------
# likelihood


def _check_support(spec: ModelSpec, values: np.ndarray):
    support = spec.support
    bad = [i for i, v in enumerate(values) if not support.contains(float(v))]
    if bad:
        shown = ", ".join(f"#{i}={values[i]:g}" for i in bad[:10])
        more = "" if len(bad) <= 10 else f" and {len(bad) - 10} more"
        raise DomainError(
            f"{len(bad)} observation(s) outside the {support.kind.value} support "
            f"of {spec.label()}: {shown}{more}")


def log_likelihood(spec: ModelSpec, data) -> float:
    """Sum of log-densities; zero observations under an atom add the log atom mass.

    Raises
    ------
    DomainError
        If an observation lies outside the support; the message lists them.
    """
    if isinstance(data, Sample):
        values = data.values
    else:
        values = np.array(data, dtype=float).ravel()
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise DomainError("log_likelihood needs at least one finite observation")
    _check_support(spec, values)
    return float(np.sum(model_logpdf(spec, values)))


# ---------------------------------------------------------------------------
# dispersion search


def _initial_dispersion(family: Family, p: float, values: np.ndarray) -> float:
    m = float(np.mean(values))
    var = float(np.var(values, ddof=1))
    scale = m ** p
    if family is Family.GEOMETRIC:
        phi0 = (var - m * m) / scale
        if not phi0 > 0:
            # under-dispersed relative to the exponential: start small
            phi0 = 1e-2 * var / scale
    else:
        phi0 = var / scale
    if not (math.isfinite(phi0) and phi0 > 0):
        phi0 = 1.0
    return phi0


def _profile_search(objective, log_phi0):
    """Minimise ``objective(log_phi)`` on an expanding bracket.

    Returns ``(log_phi, converged, evals)``.
    """
    evals = 0

    def counted(t):
        nonlocal evals
        evals += 1
        value = objective(t)
        return value if math.isfinite(value) else 1e300

    half = _BRACKET_DECADES * math.log(10.0)
    lo, hi = log_phi0 - half, log_phi0 + half
    floor, ceil = log_phi0 - _MAX_LOG_OFFSET, log_phi0 + _MAX_LOG_OFFSET
    for attempt in range(_MAX_EXPANSIONS + 1):
        res = optimize.minimize_scalar(counted, bounds=(lo, hi), method="bounded",
                                       options={"xatol": _LOG_TOL})
        width = hi - lo
        at_lo = res.x - lo < _EDGE * width
        at_hi = hi - res.x < _EDGE * width
        if not (at_lo or at_hi):
            # a flat profile means the supremum lies at a limit of the family
            best = counted(res.x)
            flat = any(counted(t) <= best + _FLAT_TOL
                       for t in (res.x - 1.0, res.x + 1.0) if floor <= t <= ceil)
            return float(res.x), not flat, evals
        new_lo = max(floor, lo - width) if at_lo else lo
        new_hi = min(ceil, hi + width) if at_hi else hi
        if attempt == _MAX_EXPANSIONS or (new_lo == lo and new_hi == hi):
            break
        lo, hi = new_lo, new_hi
    return float(res.x), False, evals


def fit(candidate, data, cdf_mode=None, compute_ksd: bool = True) -> FitResult:
    """Profile maximum-likelihood fit at a fixed power.

    Parameters
    ----------
    candidate : Candidate, (family, p) tuple or "family:p" string
        Power must exceed 1.
    data : Sample or array_like
    cdf_mode : Analytic or EcdfFromSamples, optional
        How the fitted CDF is obtained for the KS distance.
    compute_ksd : bool
        When False the KS distance is skipped and reported as NaN.

    Returns
    -------
    FitResult
        ``converged`` is False when the optimum sits on the widest bracket.
    """
    cand = as_candidate(candidate)
    sample = Sample.of(data)
    p = cand.p
    if not p > 1:
        raise DomainError(f"fitting needs p > 1; got p={p:g}")
    values = sample.values
    m = sample.mean
    if not m > 0:
        raise DomainError("the sample mean must be positive")
    probe = ModelSpec(cand.family, cand.power, m, 1.0)
    _check_support(probe, values)

    def objective(log_phi):
        spec = probe.replace(dispersion=math.exp(log_phi))
        return -float(np.sum(model_logpdf(spec, values)))

    log_phi0 = math.log(_initial_dispersion(cand.family, p, values))
    log_phi, converged, evals = _profile_search(objective, log_phi0)
    spec = probe.replace(dispersion=math.exp(log_phi))
    ll = float(np.sum(model_logpdf(spec, values)))
    converged = converged and math.isfinite(ll)
    distance = ksd(spec, sample, cdf_mode) if compute_ksd else math.nan
    return FitResult(spec, ll, distance, converged, evals)


# ---------------------------------------------------------------------------
# distances and decisions


def _model_cdf_limits(spec: ModelSpec, y: np.ndarray, cdf_mode):
    """Model CDF at ``y`` and its left limits."""
    if isinstance(cdf_mode, EcdfFromSamples):
        draws = np.sort(model_sample(spec, cdf_mode.count, cdf_mode.seed))
        right = np.searchsorted(draws, y, side="right") / draws.size
        left = np.searchsorted(draws, y, side="left") / draws.size
        return right, left
    right = np.clip(model_cdf(spec, y), 0.0, 1.0)
    p = spec.p
    if p == 1:
        left = right - np.exp(model_logpdf(spec, y))
    elif 1 < p < 2:
        left = np.where(y == 0, 0.0, right)
    else:
        left = right
    return right, left


def ksd(spec: ModelSpec, data, cdf_mode=None) -> float:
    """Kolmogorov-Smirnov distance between ``spec`` and the data's ECDF.

    The supremum is taken over the jump points of the empirical CDF, using
    both one-sided limits there, so tied observations and the atom at zero
    are handled exactly.
    """
    values = np.sort(Sample.of(data).values)
    n = values.size
    y, counts = np.unique(values, return_counts=True)
    ecdf_right = np.cumsum(counts) / n
    ecdf_left = ecdf_right - counts / n
    right, left = _model_cdf_limits(spec, y, cdf_mode or Analytic())
    d = max(np.max(np.abs(right - ecdf_right)), np.max(np.abs(left - ecdf_left)))
    return float(min(max(d, 0.0), 1.0))


def lrt(candidate_a: FitResult, candidate_b: FitResult) -> SelectionOutcome:
    """Log-ratio of maximised likelihoods; ``a`` wins only when strictly positive."""
    stat = candidate_a.log_likelihood - candidate_b.log_likelihood
    return SelectionOutcome(0 if stat > 0 else 1, Criterion.LRT, float(stat),
                            (candidate_a, candidate_b))


def decide(fits, criterion) -> SelectionOutcome:
    """Apply a criterion to already fitted candidates."""
    criterion = Criterion.parse(criterion)
    fits = tuple(fits)
    if len(fits) < 2:
        raise DomainError("selection needs at least two candidates")
    if criterion is Criterion.LRT:
        if len(fits) != 2:
            raise DomainError("the likelihood-ratio rule compares exactly two candidates")
        return lrt(*fits)
    if criterion is Criterion.KSD:
        scores = [f.ksd for f in fits]
        idx = int(np.argmin(scores))
    else:
        scores = [f.log_likelihood for f in fits]
        idx = int(np.argmax(scores))
    return SelectionOutcome(idx, criterion, float(scores[idx]), fits)


def fit_all(candidates, data, cdf_mode=None):
    sample = Sample.of(data)
    fits = []
    for c in candidates:
        cand = as_candidate(c)
        try:
            fits.append(fit(cand, sample, cdf_mode))
        except DomainError as exc:
            raise DomainError(f"candidate {cand.label()}: {exc}") from exc
        except TweedieError as exc:
            raise SelectionError(f"fitting {cand.label()} failed: {exc}") from exc
    return tuple(fits)


def select(candidates, data, criterion="ksd", cdf_mode=None) -> SelectionOutcome:
    """Fit every candidate and pick a winner.

    ``lrt`` needs exactly two candidates; ``ksd`` picks the smallest distance
    and ``loglik`` the largest maximised log-likelihood, ties going to the
    lower index.
    """
    criterion = Criterion.parse(criterion)
    candidates = [as_candidate(c) for c in candidates]
    if len(candidates) < 2:
        raise DomainError("selection needs at least two candidates")
    if criterion is Criterion.LRT and len(candidates) != 2:
        raise DomainError("the likelihood-ratio rule compares exactly two candidates")
    return decide(fit_all(candidates, data, cdf_mode), criterion)


__all__ = [
    "Analytic", "Candidate", "Criterion", "EcdfFromSamples", "FitResult",
    "Sample", "SelectionOutcome", "as_candidate", "decide", "fit", "fit_all",
    "ksd", "log_likelihood", "lrt", "select",
]
