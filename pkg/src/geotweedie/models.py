"""Family-agnostic dispatch over the Tweedie and geometric Tweedie code paths."""
from __future__ import annotations

import numpy as np

from .core import ModelSpec
from .density import sample, tweedie_cdf, tweedie_logpdf
from .geometric import geom_cdf, geom_logpdf, geom_sample


def model_logpdf(spec: ModelSpec, x) -> np.ndarray:
    """Log-density (log atom mass at zero atoms) of either family, vectorised."""
    x = np.asarray(x, dtype=float)
    if spec.is_geometric:
        return geom_logpdf(x, spec.p, spec.mean, spec.dispersion)
    return tweedie_logpdf(x, spec.p, spec.mean, spec.dispersion)


def model_cdf(spec: ModelSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if spec.is_geometric:
        return geom_cdf(x, spec.p, spec.mean, spec.dispersion)
    return tweedie_cdf(x, spec.p, spec.mean, spec.dispersion)


def model_sample(spec: ModelSpec, n: int, rng_seed=None) -> np.ndarray:
    if spec.is_geometric:
        return geom_sample(spec, n, rng_seed)
    return sample(spec, n, rng_seed)
