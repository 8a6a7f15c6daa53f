"""Parameter domains, cumulant functions, supports and closed-form indices.

Every other module builds on the small value types defined here.  All of
them are immutable; operations are pure functions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class TweedieError(Exception):
    """Base class for errors raised by this package."""


class DomainError(TweedieError, ValueError):
    """A parameter or observation lies outside its admissible domain."""


class EvaluationError(TweedieError, ArithmeticError):
    """A numerical evaluation (series, quadrature, search) failed."""


class SeriesConvergenceError(EvaluationError):
    """Series did not meet its truncation rule within ``max_terms``.

    Attributes
    ----------
    partial_sum : float
        Value accumulated before giving up.
    terms : int
        Index of the last term evaluated.
    """

    def __init__(self, message, partial_sum=float("nan"), terms=0):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.terms = terms


class SelectionError(EvaluationError):
    """A candidate model could not be fitted during selection."""


class ScenarioError(EvaluationError):
    """A simulation scenario had too many failed replicates."""


class _PoissonAlpha:
    """Tagged stand-in for the stability index at p = 1 (minus infinity)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "POISSON_ALPHA"

    def __str__(self):
        return "-inf"


POISSON_ALPHA = _PoissonAlpha()


class Family(enum.Enum):
    TWEEDIE = "tw"
    GEOMETRIC = "gtw"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "tw": cls.TWEEDIE,
            "tweedie": cls.TWEEDIE,
            "gtw": cls.GEOMETRIC,
            "geometric": cls.GEOMETRIC,
            "geometrictweedie": cls.GEOMETRIC,
            "geometric_tweedie": cls.GEOMETRIC,
        }
        try:
            return aliases[key]
        except KeyError:
            raise DomainError(f"unknown family {value!r}") from None


class Support(enum.Enum):
    REAL_LINE = "real_line"
    NONNEGATIVE_INTEGERS = "nonnegative_integers"
    NONNEGATIVE_REALS = "nonnegative_reals"
    POSITIVE_REALS = "positive_reals"


@dataclass(frozen=True)
class SupportKind:
    kind: Support
    zero_atom: bool

    def contains(self, x: float) -> bool:
        if not math.isfinite(x):
            return False
        if self.kind is Support.REAL_LINE:
            return True
        if self.kind is Support.NONNEGATIVE_REALS:
            return x >= 0
        if self.kind is Support.POSITIVE_REALS:
            return x > 0
        return x >= 0 and float(x).is_integer()


@dataclass(frozen=True)
class PowerParam:
    """Tweedie power index ``p``; values in the open interval (0, 1) do not exist."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not math.isfinite(p):
            raise DomainError(f"power must be finite, got {self.p!r}")
        if 0.0 < p < 1.0:
            raise DomainError(f"no Tweedie model exists for p in (0, 1); got p={p}")
        object.__setattr__(self, "p", p)

    @property
    def alpha(self):
        """Stability index ``(2 - p) / (1 - p)``; ``POISSON_ALPHA`` at p = 1."""
        if self.p == 1.0:
            return POISSON_ALPHA
        return (2.0 - self.p) / (1.0 - self.p)

    @property
    def support(self) -> SupportKind:
        p = self.p
        if p <= 0:
            return SupportKind(Support.REAL_LINE, False)
        if p == 1:
            return SupportKind(Support.NONNEGATIVE_INTEGERS, True)
        if p < 2:
            return SupportKind(Support.NONNEGATIVE_REALS, True)
        return SupportKind(Support.POSITIVE_REALS, False)

    @property
    def regime(self) -> str:
        """Short name of the distribution class selected by ``p``."""
        p = self.p
        if p < 0:
            return "extreme_stable"
        if p == 0:
            return "gaussian"
        if p == 1:
            return "poisson"
        if p < 2:
            return "compound_poisson_gamma"
        if p == 2:
            return "gamma"
        return "positive_stable"

    def __float__(self):
        return self.p


def as_power(p) -> PowerParam:
    return p if isinstance(p, PowerParam) else PowerParam(p)


@dataclass(frozen=True)
class ModelSpec:
    """A (family, p, mean, dispersion) quadruple.

    For the geometric family ``mean`` and ``dispersion`` are the mixture-level
    parameters (the mean of the mixture and the dispersion attached to the
    unit exponential mixing variable).
    """

    family: Family
    power: PowerParam
    mean: float
    dispersion: float

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "power", as_power(self.power))
        mean = float(self.mean)
        disp = float(self.dispersion)
        if not (math.isfinite(mean) and math.isfinite(disp)):
            raise DomainError("mean and dispersion must be finite")
        if disp <= 0:
            raise DomainError(f"dispersion must be positive, got {disp}")
        if self.power.p != 0 and mean <= 0:
            raise DomainError(f"mean must be positive for p={self.power.p}, got {mean}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "dispersion", disp)

    @classmethod
    def tweedie(cls, p, mean, dispersion) -> "ModelSpec":
        return cls(Family.TWEEDIE, as_power(p), mean, dispersion)

    @classmethod
    def geometric(cls, p, mean, dispersion) -> "ModelSpec":
        return cls(Family.GEOMETRIC, as_power(p), mean, dispersion)

    @property
    def p(self) -> float:
        return self.power.p

    @property
    def is_geometric(self) -> bool:
        return self.family is Family.GEOMETRIC

    @property
    def support(self) -> SupportKind:
        return self.power.support

    def replace(self, **changes) -> "ModelSpec":
        fields = dict(family=self.family, power=self.power, mean=self.mean,
                      dispersion=self.dispersion)
        fields.update(changes)
        return ModelSpec(**fields)

    def label(self) -> str:
        return f"{self.family.value}:{self.p:g}"


def theta_of_mean(p, m: float) -> float:
    """Canonical parameter as a function of the mean."""
    p = as_power(p).p
    if m <= 0:
        raise DomainError(f"mean must be positive, got {m}")
    if p == 1:
        return math.log(m)
    return m ** (1.0 - p) / (1.0 - p)


def kappa_of_mean(p, m: float) -> float:
    """Cumulant function evaluated at the canonical parameter of mean ``m``."""
    p = as_power(p).p
    if m <= 0:
        raise DomainError(f"mean must be positive, got {m}")
    if p == 2:
        return math.log(m)
    return m ** (2.0 - p) / (2.0 - p)


def poisson_rate(p: float, m, phi):
    """Poisson rate of the compound Poisson-gamma form, valid for 1 < p < 2."""
    return m ** (2.0 - p) / ((2.0 - p) * phi)


def zero_mass(spec: ModelSpec) -> float:
    """Probability of an exact zero."""
    p = spec.p
    if p <= 1:
        raise DomainError(f"zero mass is defined here for p > 1 only; got p={p}")
    if p >= 2:
        return 0.0
    if spec.is_geometric:
        from .geometric import geom_zero_mass

        return geom_zero_mass(spec)
    return math.exp(-poisson_rate(p, spec.mean, spec.dispersion))


def variation_index(spec: ModelSpec) -> float:
    """Variance divided by the squared mean."""
    p, m, phi = spec.p, spec.mean, spec.dispersion
    if m <= 0:
        raise DomainError("variation index needs a positive mean")
    vi = phi * m ** (p - 2.0)
    return 1.0 + vi if spec.is_geometric else vi


def matched_geometric_dispersion(phi: float) -> float:
    """Geometric-gamma dispersion with the same variation index as gamma(phi)."""
    if not phi > 1:
        raise DomainError(f"a positive geometric dispersion needs phi > 1; got {phi}")
    return phi - 1.0
