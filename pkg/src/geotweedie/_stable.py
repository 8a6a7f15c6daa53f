"""Log-density of the positive stable factor ``a_p`` for p > 2.

For p > 2 the Tweedie base measure is a rescaled one-sided stable law:
``a_p(y; phi) = f_S(y / c) / c`` where ``S`` has Laplace transform
``exp(-s**alpha)``.  Large arguments use the alternating power series in
``y**(-alpha)``; small arguments, where that series cancels catastrophically,
use Kanter's integral representation

    f_S(x) = alpha / (1 - alpha) * x**(-1/(1-alpha)) / pi
             * int_0^pi A(u) exp(-x**(-alpha/(1-alpha)) A(u)) du

which is a positive integrand and loses no precision.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from ._numerics import composite_nodes, log_weighted_sum

# series is trusted while A0 * zeta stays below this (condition number ~ e**8)
_SERIES_ZETA_LIMIT = 8.0
_SERIES_COND_LIMIT = 1e4
_KANTER_DROP = 60.0


def stable_scale(p, phi):
    """Scale ``c`` such that ``a_p(y; phi) = f_S(y / c) / c``."""
    return np.exp(log_stable_scale(p, np.log(phi)))


def log_stable_scale(p, log_phi):
    alpha = (2.0 - p) / (1.0 - p)
    return (np.log(p - 1.0) + (alpha - 1.0) / alpha * log_phi
            - np.log(p - 2.0) / alpha)


def _log_sinc(t):
    """``log(sin(t) / t)`` accurate near zero."""
    t = np.asarray(t, dtype=float)
    t2 = t * t
    small = t < 0.1
    series = -t2 * (1 / 6 + t2 * (1 / 180 + t2 * (1 / 2835 + t2 / 37800)))
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(np.sin(t) / np.where(small, 1.0, t))
    return np.where(small, series, direct)


def log_kanter_ratio(u, alpha):
    """``log(A(u) / A(0))`` for Kanter's function ``A``."""
    r = 1.0 / (1.0 - alpha)
    return (r * (_log_sinc(alpha * u) - _log_sinc(u))
            + _log_sinc((1.0 - alpha) * u) - _log_sinc(alpha * u))


def kanter_a0(alpha):
    return (1.0 - alpha) * alpha ** (alpha / (1.0 - alpha))


def _kanter_cutoff(zeta, alpha, a0):
    """Upper limit where ``zeta * (A(u) - A0)`` reaches ``_KANTER_DROP``."""
    target = np.log1p(_KANTER_DROP / (zeta * a0))
    lo = np.zeros_like(zeta)
    hi = np.full_like(zeta, np.pi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        over = log_kanter_ratio(mid, alpha) > target
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
    return hi


def log_stable_kanter(x, alpha, panels=8, order=12, log_x=None):
    """Log-density of the standard positive stable law by Kanter's integral."""
    if log_x is None:
        log_x = np.log(np.asarray(x, dtype=float))
    r = 1.0 / (1.0 - alpha)
    a0 = kanter_a0(alpha)
    log_zeta = -alpha * r * log_x
    zeta = np.exp(np.minimum(log_zeta, 700.0))
    ucut = _kanter_cutoff(zeta, alpha, a0)
    nodes, weights = composite_nodes(np.zeros_like(ucut), ucut, panels, order)
    lr = log_kanter_ratio(nodes, alpha)
    log_int = (np.log(a0) + lr
               - zeta[:, None] * a0 * np.expm1(lr))
    log_i = log_weighted_sum(log_int, weights, axis=1)
    out = (np.log(alpha * r) - r * log_x - np.log(np.pi)
           - zeta * a0 + log_i)
    return np.where(log_zeta > 700.0, -np.inf, out)


def _sin_pi(t):
    """``sin(pi t)`` with exact zeros at integers."""
    red = np.mod(t, 2.0)
    out = np.sin(np.pi * red)
    near = np.abs(red - np.round(red)) < 1e-12
    return np.where(near, 0.0, out)


def log_stable_series(x, alpha, log_x=None):
    """Log-density of the standard positive stable law by its power series.

    Returns ``(log_density, condition)``; ``condition`` is the ratio of the
    absolute series to the series value, ``inf`` when the sum is not positive.
    """
    if log_x is None:
        log_x = np.log(np.asarray(x, dtype=float))
    logz = -alpha * log_x
    zeta = np.exp(logz / (1.0 - alpha))
    kpeak = float(np.max(zeta)) * alpha ** (alpha / (1.0 - alpha)) if log_x.size else 0.0
    K = int(np.ceil(2.0 * kpeak + 20.0 * np.sqrt(kpeak + 1.0) + 40.0))
    k = np.arange(1, K + 1, dtype=float)
    sk = _sin_pi(k * alpha)
    with np.errstate(divide="ignore"):
        log_sin = np.log(np.abs(sk))
    logmag = (k[None, :] * logz[:, None] + special.gammaln(1.0 + alpha * k)
              - special.gammaln(1.0 + k) + log_sin)
    sign = np.where(k % 2 == 1, 1.0, -1.0) * np.sign(sk)
    peak = np.max(logmag, axis=1)
    scaled = np.exp(logmag - peak[:, None])
    total = scaled @ sign
    absolute = scaled.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(total > 0, absolute / total, np.inf)
        logd = np.where(total > 0, peak + np.log(np.where(total > 0, total, 1.0)), -np.inf)
    return logd - np.log(np.pi) - log_x, cond


_CHUNK = 8192


def log_stable_density(x, alpha, log_x=None):
    """Log-density of the standard positive stable law, any ``x > 0``.

    Pass ``log_x`` instead of ``x`` when the argument may under- or overflow.
    """
    if log_x is None:
        log_x = np.log(np.asarray(x, dtype=float))
    log_x = np.atleast_1d(np.asarray(log_x, dtype=float))
    if log_x.size > _CHUNK:
        return np.concatenate([log_stable_density(None, alpha, log_x[i:i + _CHUNK])
                               for i in range(0, log_x.size, _CHUNK)])
    out = np.empty_like(log_x)
    zeta = np.exp(np.minimum(-alpha / (1.0 - alpha) * log_x, 700.0))
    use_series = kanter_a0(alpha) * zeta <= _SERIES_ZETA_LIMIT
    if np.any(use_series):
        vals, cond = log_stable_series(None, alpha, log_x[use_series])
        good = cond < _SERIES_COND_LIMIT
        idx = np.flatnonzero(use_series)
        out[idx[good]] = vals[good]
        use_series[idx[~good]] = False
    rest = ~use_series
    if np.any(rest):
        out[rest] = log_stable_kanter(None, alpha, log_x=log_x[rest])
    return out


def log_a_positive_stable(y, p, phi):
    """Elementwise ``log a_p(y; phi)`` for p > 2 and y > 0 (broadcast)."""
    y, phi = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(phi, dtype=float))
    alpha = (2.0 - p) / (1.0 - p)
    log_c = log_stable_scale(p, np.log(phi))
    log_x = (np.log(y) - log_c).ravel()
    return log_stable_density(None, alpha, log_x).reshape(y.shape) - log_c


def sample_positive_stable(rng, alpha, size):
    """Kanter's representation ``S = (A(U) / E)**((1-alpha)/alpha)``."""
    u = rng.uniform(0.0, np.pi, size)
    e = rng.standard_exponential(size)
    log_a = np.log(kanter_a0(alpha)) + log_kanter_ratio(u, alpha)
    return np.exp((1.0 - alpha) / alpha * (log_a - np.log(e)))
