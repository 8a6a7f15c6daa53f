"""Monte Carlo Kullback-Leibler divergence between neighbouring models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DomainError, EvaluationError, ModelSpec, as_power
from .models import model_logpdf, model_sample

DEFAULT_DRAWS = 100_000
_MAX_EXCLUDED = 0.01


@dataclass(frozen=True)
class KlEstimate:
    """Mean log-ratio and its standard error.

    Attributes
    ----------
    value : float
        Estimated divergence in nats.
    std_error : float
        Sample standard deviation of the log-ratios over ``sqrt(draw_count)``.
    draw_count : int
        Number of draws that entered the average.
    excluded : int
        Draws dropped because a density vanished at them.
    """

    value: float
    std_error: float
    draw_count: int
    excluded: int = 0


def kl_estimate(parent: ModelSpec, alternative: ModelSpec,
                draw_count: int = DEFAULT_DRAWS, rng_seed=0) -> KlEstimate:
    """Estimate ``KL(parent || alternative)`` from draws of ``parent``.

    Parameters
    ----------
    parent, alternative : ModelSpec
        Same family and same support kind.
    draw_count : int
    rng_seed : int

    Returns
    -------
    KlEstimate

    Raises
    ------
    DomainError
        Mismatched families or supports.
    EvaluationError
        More than 1% of the draws had a vanishing density under either model.
    """
    if parent.family is not alternative.family:
        raise DomainError("both models must belong to the same family")
    if parent.support != alternative.support:
        raise DomainError(
            f"supports differ: p={parent.p:g} gives {parent.support.kind.value}, "
            f"p={alternative.p:g} gives {alternative.support.kind.value}")
    draw_count = int(draw_count)
    if draw_count < 1:
        raise DomainError("draw_count must be positive")
    if parent == alternative:
        return KlEstimate(0.0, 0.0, draw_count)
    x = model_sample(parent, draw_count, rng_seed)
    # zero draws carry log atom masses in both terms
    ratio = model_logpdf(parent, x) - model_logpdf(alternative, x)
    keep = np.isfinite(ratio)
    excluded = int(draw_count - np.count_nonzero(keep))
    if excluded > _MAX_EXCLUDED * draw_count:
        raise EvaluationError(
            f"{excluded} of {draw_count} draws have zero density under one model; "
            "the supports are probably incompatible")
    r = ratio[keep]
    n = r.size
    se = float(np.std(r, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return KlEstimate(float(np.mean(r)), se, n, excluded)


def _same_regime(p: float, q: float) -> bool:
    try:
        return as_power(q).support == as_power(p).support
    except DomainError:
        return False


def kl_curve(parent_p, eps_grid, m: float = 1.0, phi: float = 1.0,
             draw_count: int = DEFAULT_DRAWS, rng_seed=0, family="tw"):
    """``KL(p || p + eps)`` over a grid of offsets.

    Grid point ``i`` uses seed ``rng_seed + i``.  Returns a list of
    ``(eps, KlEstimate)`` pairs in grid order.
    """
    p = as_power(parent_p).p
    eps = [float(e) for e in np.atleast_1d(np.asarray(eps_grid, dtype=float))]
    bad = [e for e in eps if not _same_regime(p, p + e)]
    if bad:
        raise DomainError(f"offsets leave the regime of p={p:g}: {bad}")
    parent = ModelSpec(family, p, m, phi)
    out = []
    for i, e in enumerate(eps):
        alt = parent.replace(power=as_power(p + e))
        out.append((e, kl_estimate(parent, alt, draw_count, int(rng_seed) + i)))
    return out
