"""Geometric Tweedie laws as unit-exponential mixtures of Tweedie laws.

``Z | X = x ~ Tw_p(x m, x**(1-p) phi)`` with ``X ~ Exp(1)``, so

    f(z) = int_0^inf exp(-x) f_Tw(z; x m, x**(1-p) phi) dx.

The module offers the plain Gauss-Laguerre and Monte Carlo evaluations of
that integral together with more accurate routes used for likelihoods:

* for 1 < p < 2 the mixture is exactly a compound geometric-gamma law,
  because the Poisson rate ``x * lambda0`` is linear in ``x`` while the
  gamma scale does not depend on ``x``;
* for p >= 2 the integrand is sharply peaked in ``x`` when the dispersion
  is small, so the integral is taken in ``log x`` on panels concentrated
  around the peak.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special

from ._numerics import composite_nodes, log_weighted_sum, windowed_logsumexp
from ._stable import sample_positive_stable, stable_scale
from .core import DomainError, EvaluationError, ModelSpec
from .density import (
    DensityValue,
    integrate_log_grid,
    log_grid_nodes,
    sample_tweedie,
    tweedie_cdf,
    tweedie_logpdf,
)

__all__ = [
    "MixtureQuadrature",
    "MixtureMonteCarlo",
    "McDensityValue",
    "gauss_laguerre",
    "geom_density_gl",
    "geom_density_mc",
    "geom_zero_mass",
    "geom_logpdf",
    "geom_cdf",
    "geom_sample",
]

_TINY = np.finfo(float).tiny
_HUGE = np.finfo(float).max


# ---------------------------------------------------------------------------
# Gauss-Laguerre rule


def _laguerre_pair(n, z):
    """``(L_n(z), L_{n-1}(z))`` sharing a scale factor ``exp(log_scale)``."""
    p1, p2, log_scale = 1.0, 0.0, 0.0
    for j in range(n):
        p3 = p2
        p2 = p1
        p1 = ((2 * j + 1 - z) * p2 - j * p3) / (j + 1)
        big = abs(p1)
        if big > 1e150:
            p1 /= big
            p2 /= big
            log_scale += math.log(big)
    return p1, p2, log_scale


def _laguerre_pair_mp(n, z):
    p1, p2 = mpmath.mpf(1), mpmath.mpf(0)
    for j in range(n):
        p1, p2 = ((2 * j + 1 - z) * p1 - j * p2) / (j + 1), p1
    return p1, p2


@functools.lru_cache(maxsize=None)
def _laguerre_rule(n: int):
    """Nodes and weights of the n-point Gauss-Laguerre rule (weight e^-x).

    Roots of ``L_n`` by Newton iteration from asymptotic starting guesses,
    finished in 32-digit arithmetic; weights from
    ``w_i = x_i / ((n + 1)^2 L_{n+1}(x_i)^2)`` formed in log form to avoid
    underflow.
    """
    if n < 1:
        raise DomainError(f"node count must be positive, got {n}")
    x = np.empty(n)
    logw = np.empty(n)
    z = 0.0
    for i in range(n):
        if i == 0:
            z = 3.0 / (1.0 + 2.4 * n)
        elif i == 1:
            z += 15.0 / (1.0 + 2.5 * n)
        else:
            ai = i - 1
            z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2])
        for _ in range(100):
            p1, p2, _ = _laguerre_pair(n, z)
            # derivative: z L_n'(z) = n (L_n - L_{n-1})
            step = p1 * z / (n * (p1 - p2))
            z -= step
            if abs(step) <= 1e-12 * abs(z):
                break
        else:
            raise EvaluationError(f"Laguerre root {i} of order {n} did not converge")
        # two extended-precision Newton steps remove the recurrence round-off
        with mpmath.workdps(32):
            zm = mpmath.mpf(z)
            for _ in range(2):
                l1, l0 = _laguerre_pair_mp(n, zm)
                zm -= l1 * zm / (n * (l1 - l0))
            _, l0 = _laguerre_pair_mp(n, zm)
            x[i] = float(zm)
            # at a root L_{n+1} = -n/(n+1) L_{n-1}, so w = z / (n L_{n-1})^2
            logw[i] = float(mpmath.log(zm / (n * l0) ** 2))
        z = x[i]
    if np.any(np.diff(x) <= 0):
        raise EvaluationError(f"Laguerre nodes of order {n} are not strictly increasing")
    w = np.exp(logw)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_laguerre(n: int = 64):
    """Nodes and weights for ``int_0^inf exp(-x) g(x) dx ~ sum w_i g(x_i)``."""
    return _laguerre_rule(int(n))


@dataclass(frozen=True)
class MixtureQuadrature:
    """Gauss-Laguerre rule used for the exponential mixture integral."""

    node_count: int = 64
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        try:
            x, w = gauss_laguerre(self.node_count)
        except (DomainError, EvaluationError) as exc:
            raise DomainError(f"cannot build a {self.node_count}-node rule: {exc}") from exc
        object.__setattr__(self, "nodes", x)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class MixtureMonteCarlo:
    """Monte Carlo settings for the sample-average mixture density."""

    draw_count: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if int(self.draw_count) != self.draw_count or self.draw_count < 1:
            raise DomainError(f"draw_count must be a positive integer, got {self.draw_count}")

    def draws(self) -> np.ndarray:
        return np.random.default_rng(self.seed).standard_exponential(int(self.draw_count))


@dataclass(frozen=True)
class McDensityValue(DensityValue):
    """Monte Carlo density with its standard error."""

    std_error: float = 0.0
    draws: int = 0
    failures: int = 0


def _check(spec):
    if not spec.is_geometric:
        raise DomainError("expected a geometric Tweedie specification")
    p = spec.p
    if 0 < p < 1:
        raise DomainError(f"no model exists for p={p}")


def _mixed_params(spec, x):
    p = spec.p
    return x * spec.mean, x ** (1.0 - p) * spec.dispersion


def _is_atom(spec, z):
    return (1 < spec.p < 2 and z == 0) or spec.p == 1


# ---------------------------------------------------------------------------
# point evaluations


def geom_density_gl(spec: ModelSpec, z, quad: MixtureQuadrature | None = None,
                    policy=None) -> DensityValue:
    """Gauss-Laguerre evaluation of the mixture density at one point.

    ``policy`` is accepted for interface symmetry with the Tweedie routines;
    the vectorised Tweedie engine sums every series to full precision.
    """
    _check(spec)
    quad = quad or MixtureQuadrature()
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"z must be finite, got {z}")
    mu, phi = _mixed_params(spec, quad.nodes)
    lf = tweedie_logpdf(np.full(mu.shape, z), spec.p, mu, phi)
    return DensityValue.from_log(log_weighted_sum(lf, quad.weights), _is_atom(spec, z))


def geom_density_mc(spec: ModelSpec, z, mc: MixtureMonteCarlo | None = None,
                    policy=None) -> McDensityValue:
    """Sample-average evaluation of the mixture density at one point.

    Draws whose Tweedie density cannot be evaluated are skipped and counted;
    more than 1% of failures raises :class:`EvaluationError`.
    """
    _check(spec)
    mc = mc or MixtureMonteCarlo()
    z = float(z)
    x = mc.draws()
    mu, phi = _mixed_params(spec, x)
    with np.errstate(all="ignore"):
        vals = np.exp(tweedie_logpdf(np.full(x.shape, z), spec.p, mu, phi))
    ok = np.isfinite(vals)
    failures = int(np.count_nonzero(~ok))
    if failures > 0.01 * x.size:
        raise EvaluationError(f"{failures} of {x.size} mixture draws failed")
    v = vals[ok]
    mean = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    log_mean = math.log(mean) if mean > 0 else -math.inf
    return McDensityValue(mean, _is_atom(spec, z), log_mean, se, int(v.size), failures)


def geom_zero_mass(spec: ModelSpec, quad: MixtureQuadrature | None = None) -> float:
    """Probability of an exact zero.

    The Poisson rate of the mixed law is ``x * lambda0`` with
    ``lambda0 = m**(2-p) / ((2-p) phi)``, so the mixture integral equals
    ``1 / (1 + lambda0)``.  Passing ``quad`` evaluates the same integral with
    that Gauss-Laguerre rule instead.
    """
    _check(spec)
    p = spec.p
    if p == 2:
        return 0.0
    if not 1 < p < 2:
        raise DomainError(f"zero mass is defined for 1 < p <= 2; got p={p}")
    lam0 = spec.mean ** (2 - p) / ((2 - p) * spec.dispersion)
    if quad is None:
        return 1.0 / (1.0 + lam0)
    return float(np.dot(quad.weights, np.exp(-lam0 * quad.nodes)))


# ---------------------------------------------------------------------------
# vectorised evaluation


def _geometric_parts(p, m, phi):
    lam0 = m ** (2 - p) / ((2 - p) * phi)
    tau = (2 - p) / (p - 1)
    gam = phi * (p - 1) * m ** (p - 1)
    log_q = math.log(lam0) - math.log1p(lam0)
    return lam0, tau, gam, log_q


def _logpdf_compound_geometric(z, p, m, phi):
    """Exact log-density of the 1 < p < 2 mixture (atom at zero)."""
    lam0, tau, gam, log_q = _geometric_parts(p, m, phi)
    out = np.full(z.shape, -np.inf)
    out[z == 0] = -math.log1p(lam0)
    pos = np.flatnonzero(z > 0)
    if pos.size == 0:
        return out
    u = z[pos] / gam
    log_u = np.log(u)
    log_p1 = -math.log1p(lam0)
    # peak of P(N=k) * gamma(u; k tau) sits near k tau = u q^(1/tau)
    center = np.maximum(1.0, u * math.exp(log_q / tau) / tau)
    half = 10.0 * np.sqrt(center / tau) + 15.0

    def logterm(k, rows):
        a = k * tau
        return (log_p1 + k * log_q + (a - 1.0) * log_u[rows, None]
                - u[rows, None] - special.gammaln(a))

    out[pos] = windowed_logsumexp(logterm, center, half, lower=1) - math.log(gam)
    return out


_SCAN_STEP = 0.75
_BULK_STEP = 0.4
_TAIL_STEP = 4.0
_SCAN_DROP = 40.0


def _mixture_log_integrand(z, t, p, m, phi):
    """``log(f_Tw(z; x m, x^(1-p) phi) x e^(-x))`` at ``x = e^t`` (rows of z)."""
    x = np.exp(t)
    with np.errstate(over="ignore"):
        lf = tweedie_logpdf(z[:, None], p, x * m, np.exp((1.0 - p) * t + math.log(phi)))
    return lf + t - x


def _mixture_log_cdf_integrand(z, t, p, m, phi):
    """``log(F_Tw(z; x m, x^(1-p) phi) x e^(-x))`` at ``x = e^t``."""
    x = np.exp(t)
    with np.errstate(over="ignore", divide="ignore"):
        F = tweedie_cdf(z[:, None], p, x * m, np.exp((1.0 - p) * t + math.log(phi)))
        return np.log(F) + t - x


def _uniform_grid(a, b, count):
    frac = np.linspace(0.0, 1.0, count)
    return a[:, None] + (b - a)[:, None] * frac[None, :]


def _adaptive_panels(z, p, m, phi, log_integrand=_mixture_log_integrand):
    """Composite Gauss-Legendre panels in ``t = log x`` for the mixture integral.

    A coarse scan locates the bulk of the integrand (which for small ``z``
    sits well away from ``log(z / m)``); a fine window is kept around the
    conditional-mean match ``x m = z`` for sharply peaked integrands.
    """
    v = phi * m ** (p - 2.0)
    xs = np.maximum(z / m, 1e-300)
    ts = np.log(xs)
    w = np.sqrt(v / xs)
    t_floor = -650.0 / max(p - 1.0, 1.0)
    tmax = np.log(60.0 + 2.0 * xs + 20.0 * np.sqrt(v * xs))
    tlo = np.maximum(t_floor, np.minimum(ts, 0.0) - 30.0)
    for _ in range(6):
        count = int(np.ceil(np.max(tmax - tlo) / _SCAN_STEP)) + 1
        grid = _uniform_grid(tlo, tmax, count)
        lf = log_integrand(z, grid, p, m, phi)
        lf = np.where(np.isnan(lf), -np.inf, lf)
        peak = lf.max(axis=1)
        short = (lf[:, 0] > peak - _SCAN_DROP) & (tlo > t_floor)
        if not np.any(short):
            break
        tlo = np.where(short, np.maximum(t_floor, tlo - (tmax - tlo)), tlo)
    step = (tmax - tlo) / (count - 1)
    hot = lf >= peak[:, None] - _SCAN_DROP
    first = np.argmax(hot, axis=1)
    last = count - 1 - np.argmax(hot[:, ::-1], axis=1)
    rows = np.arange(z.size)
    r_lo = np.maximum(tlo, grid[rows, first] - step)
    r_hi = np.minimum(tmax, grid[rows, last] + step)
    sharp = w < 1.0
    s_lo = np.where(sharp, np.clip(ts - 10.0 * w, tlo, tmax), tlo)
    s_hi = np.where(sharp, np.clip(ts + 10.0 * w, tlo, tmax), tlo)
    cuts = np.sort(np.stack([tlo, r_lo, r_hi, s_lo, s_hi, tmax], axis=1), axis=1)
    nodes, weights = [], []
    for k in range(cuts.shape[1] - 1):
        a, b = cuts[:, k], cuts[:, k + 1]
        mid = 0.5 * (a + b)
        h = np.where((mid > r_lo) & (mid < r_hi), _BULK_STEP, _TAIL_STEP)
        h = np.where(sharp & (mid > s_lo) & (mid < s_hi),
                     np.minimum(h, 20.0 * w / 12.0), h)
        panels = int(np.clip(np.max(np.ceil((b - a) / h)), 1, 400))
        n, wt = composite_nodes(a, b, panels)
        nodes.append(n)
        weights.append(wt)
    return np.hstack(nodes), np.hstack(weights), tlo


def _logpdf_adaptive(z, p, m, phi):
    """log of the mixture integral for p >= 2 (z > 0)."""
    out = np.full(z.shape, -np.inf)
    pos = np.flatnonzero(z > 0)
    chunk = 512
    for s in range(0, pos.size, chunk):
        idx = pos[s:s + chunk]
        t, wt, _ = _adaptive_panels(z[idx], p, m, phi)
        lf = _mixture_log_integrand(z[idx], t, p, m, phi)
        out[idx] = log_weighted_sum(lf, wt, axis=1)
    return out


def _logpdf_gl(z, p, m, phi, n):
    x, w = gauss_laguerre(n)
    lf = tweedie_logpdf(z[:, None], p, x * m, x ** (1.0 - p) * phi)
    return log_weighted_sum(lf, w, axis=1)


def geom_logpdf(z, p, m, phi, method: str = "auto", node_count: int = 64,
                mc: MixtureMonteCarlo | None = None):
    """Elementwise log-density (log-mass at zero atoms) of ``GTw_p(m, phi)``.

    Parameters
    ----------
    z : array_like
    p, m, phi : float
        Power, mixture mean and mixture dispersion.
    method : {"auto", "series", "adaptive", "gl", "mc"}
        ``auto`` picks the exact compound geometric-gamma series for
        1 < p < 2, the peak-adaptive quadrature for p >= 2 and the
        Gauss-Laguerre rule otherwise.
    """
    spec = ModelSpec.geometric(p, m, phi)
    p = spec.p
    z = np.asarray(z, dtype=float)
    shape = z.shape
    zf = z.ravel()
    if method == "auto":
        method = "series" if 1 < p < 2 else ("adaptive" if p >= 2 else "gl")
    if method == "series":
        if not 1 < p < 2:
            raise DomainError("the compound geometric series needs 1 < p < 2")
        out = _logpdf_compound_geometric(zf, p, m, phi)
    elif method == "adaptive":
        if p < 2:
            raise DomainError("the adaptive mixture quadrature needs p >= 2")
        out = _logpdf_adaptive(zf, p, m, phi)
    elif method == "gl":
        out = _logpdf_gl(zf, p, m, phi, node_count)
    elif method == "mc":
        mc = mc or MixtureMonteCarlo()
        out = np.array([geom_density_mc(spec, v, mc).log_value for v in zf])
    else:
        raise DomainError(f"unknown method {method!r}")
    return out.reshape(shape)


def _cdf_compound_geometric(z, p, m, phi):
    lam0, tau, gam, log_q = _geometric_parts(p, m, phi)
    q = math.exp(log_q)
    out = np.where(z >= 0, 1.0 / (1.0 + lam0), 0.0)
    pos = np.flatnonzero(z > 0)
    if pos.size == 0:
        return out
    u = z[pos] / gam
    # gamma CDF in the shape switches from 1 to 0 around k tau = u
    k_lo = np.maximum(0.0, np.floor((u - 12.0 * np.sqrt(u) - 12.0) / tau))
    k_hi = np.ceil((u + 12.0 * np.sqrt(u) + 12.0) / tau) + 1
    # P(1 <= N <= k_lo) with P(N = k) = (1 - q) q^k
    acc = q - q ** (k_lo + 1.0)
    span = (k_hi - k_lo).astype(int)
    step = max(1, 2_000_000 // max(1, int(span.max())))
    for s in range(0, pos.size, step):
        sl = slice(s, s + step)
        K = int(span[sl].max())
        k = k_lo[sl, None] + 1.0 + np.arange(K)[None, :]
        valid = k <= k_hi[sl, None]
        w = np.where(valid, (1.0 - q) * np.exp(k * log_q), 0.0)
        g = special.gammainc(k * tau, u[sl, None])
        acc[sl] += np.sum(w * g, axis=1)
    out[pos] += acc
    return np.minimum(out, 1.0)


def _cdf_mixture_closed(z, p, m, phi):
    """Mixture of closed-form conditional CDFs (p = 2 or 3) on adaptive panels."""
    out = np.zeros(z.shape)
    pos = np.flatnonzero(z > 0)
    for s in range(0, pos.size, 512):
        idx = pos[s:s + 512]
        t, wt, tlo = _adaptive_panels(z[idx], p, m, phi, _mixture_log_cdf_integrand)
        lf = _mixture_log_cdf_integrand(z[idx], t, p, m, phi)
        # below exp(tlo) <= e**-30 the conditional CDF is taken as 1
        out[idx] = np.exp(log_weighted_sum(lf, wt, axis=1)) - np.expm1(-np.exp(tlo))
    return np.clip(out, 0.0, 1.0)


def _cdf_by_density(z, p, m, phi):
    """CDF for general p > 2 by integrating the mixture density in ``log z``."""
    out = np.zeros(z.shape)
    pos = z > 0
    if not np.any(pos):
        return out

    def lp(v):
        return _logpdf_adaptive(v, p, m, phi)

    # near zero the density behaves like z**(1 / (1 - p)); move the cut down
    # until the local slope has settled on that power
    limit = 1.0 / (1.0 - p)
    z_lo = 1e-12 * m
    for _ in range(30):
        l0, l1 = lp(np.array([z_lo, z_lo * math.exp(-1.0)]))
        slope = l0 - l1
        if abs(slope - limit) < 1e-3 * (1.0 + limit) or z_lo < 1e-200 * m:
            break
        z_lo *= 1e-6
    if not slope > -1.0:
        raise EvaluationError("mixture density is not integrable near zero")
    head = z_lo * math.exp(l0) / (1.0 + slope)
    vi = 1.0 + phi * m ** (p - 2.0)
    z_hi = max(float(z.max()) * 1.01, m * (80.0 + 40.0 * math.sqrt(vi)))
    targets = np.log(z[pos & (z > z_lo)])
    edges = log_grid_nodes(m, z_lo, z_hi, 1.0, extra=targets)
    cum = integrate_log_grid(lp, edges) + head
    if abs(cum[-1] - 1.0) > 1e-6:
        raise EvaluationError(f"mixture density integrates to {cum[-1]}")
    sel = pos & (z > z_lo)
    out[sel] = np.minimum(cum[np.searchsorted(edges, np.log(z[sel]))], 1.0)
    small = pos & (z <= z_lo)
    out[small] = head * (z[small] / z_lo) ** (1.0 + slope)
    return out


def geom_cdf(z, p=None, m=None, phi=None, method: str = "auto", node_count: int = 64):
    """Distribution function of ``GTw_p(m, phi)``.

    Accepts either ``geom_cdf(spec, z)`` or ``geom_cdf(z, p, m, phi)``.
    ``method="gl"`` sums Tweedie CDFs over the Gauss-Laguerre nodes; ``auto``
    uses the exact compound geometric-gamma form for 1 < p < 2 and
    peak-adaptive quadrature otherwise.
    """
    if isinstance(z, ModelSpec):
        spec, z = z, p
        if not spec.is_geometric:
            raise DomainError("expected a geometric Tweedie specification")
        p, m, phi = spec.p, spec.mean, spec.dispersion
    ModelSpec.geometric(p, m, phi)
    zz = np.asarray(z, dtype=float)
    shape = zz.shape
    zf = zz.ravel()
    if method == "gl":
        x, w = gauss_laguerre(node_count)
        F = tweedie_cdf(zf[:, None], p, x * m, x ** (1.0 - p) * phi)
        out = F @ w
    elif method != "auto":
        raise DomainError(f"unknown method {method!r}")
    elif 1 < p < 2:
        out = _cdf_compound_geometric(zf, p, m, phi)
    elif p in (2.0, 3.0):
        out = _cdf_mixture_closed(zf, p, m, phi)
    elif p > 2:
        out = _cdf_by_density(zf, p, m, phi)
    else:
        x, w = gauss_laguerre(node_count)
        out = tweedie_cdf(zf[:, None], p, x * m, x ** (1.0 - p) * phi) @ w
    out = np.asarray(out).reshape(shape)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# sampling


def _tilted_stable(rng, p, mu, phi):
    """Exact draws of ``Tw_p(mu, phi)``, p > 2, with array parameters.

    ``Tw_p(mu, phi)`` is the mean of ``N`` independent ``Tw_p(mu, N phi)``
    pieces.  Each piece is an exponentially tilted stable variate drawn by
    rejection from the untilted law, accepted with probability
    ``exp(-Lambda / N)`` where ``Lambda = mu**(2-p) / ((p-2) phi)``; taking
    ``N = ceil(Lambda)`` keeps that above ``1/e``.
    """
    alpha = (2.0 - p) / (1.0 - p)
    lam = mu ** (2.0 - p) / ((p - 2.0) * phi)
    pieces = np.maximum(1, np.ceil(lam)).astype(np.int64)
    owner = np.repeat(np.arange(mu.size), pieces)
    piece_phi = (pieces * phi)[owner]
    scale = stable_scale(p, piece_phi)
    theta = (mu ** (1.0 - p) / (1.0 - p))[owner]
    values = np.empty(owner.size)
    pending = np.arange(owner.size)
    while pending.size:
        w = scale[pending] * sample_positive_stable(rng, alpha, pending.size)
        accept = np.log(rng.random(pending.size)) < theta[pending] * w / piece_phi[pending]
        values[pending[accept]] = w[accept]
        pending = pending[~accept]
    return np.bincount(owner, weights=values, minlength=mu.size) / pieces


def geom_sample(spec: ModelSpec, n: int, rng_seed=None) -> np.ndarray:
    """``n`` i.i.d. draws from a geometric Tweedie model.

    Each draw takes ``x ~ Exp(1)`` and then one ``Tw_p(x m, x**(1-p) phi)``
    variate.  Mixed dispersions outside the floating-point range are clamped
    and counted; more than 1% clamped raises :class:`EvaluationError`.
    """
    _check(spec)
    p = spec.p
    if not (p == 0 or p > 1):
        raise DomainError(f"sampling is not available for p={p}")
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    if n == 0:
        return np.empty(0)
    x = rng.standard_exponential(n)
    with np.errstate(over="ignore", divide="ignore"):
        mu, phi = _mixed_params(spec, x)
    bad = ~((phi >= _TINY) & (phi <= _HUGE))
    if np.count_nonzero(bad) > 0.01 * n:
        raise EvaluationError(f"{np.count_nonzero(bad)} of {n} mixed dispersions out of range")
    phi = np.clip(phi, _TINY, _HUGE)
    mu = np.maximum(mu, _TINY) if p != 0 else mu
    if p > 2 and p != 3:
        return np.maximum(_tilted_stable(rng, p, mu, phi), _TINY)
    return np.asarray(sample_tweedie(rng, p, mu, phi), dtype=float)
