"""Tweedie densities, distribution functions, quantiles and samplers.

Two evaluation paths are provided.  :func:`a_series` and :func:`density`
are scalar routines that sum the base-measure series term by term under an
explicit :class:`SeriesPolicy`, escalating to arbitrary precision when an
alternating series cancels.  :func:`tweedie_logpdf` and :func:`tweedie_cdf`
are vectorised and are what the likelihood and simulation code call; they
sum only the window of non-negligible terms (1 < p < 2) or switch to an
integral representation where the alternating series is ill-conditioned
(p > 2).
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, optimize, special, stats

from ._numerics import composite_nodes, gamma_logpdf, legendre_rule, windowed_logsumexp
from ._stable import kanter_a0, log_a_positive_stable
from .core import (
    DomainError,
    EvaluationError,
    ModelSpec,
    SeriesConvergenceError,
    as_power,
    kappa_of_mean,
    theta_of_mean,
)

__all__ = [
    "SeriesPolicy",
    "DensityValue",
    "a_series",
    "density",
    "cdf",
    "quantile",
    "sample",
    "tweedie_logpdf",
    "tweedie_cdf",
]

_FLOAT_REL_ERR = 1e-14
_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation rule for the base-measure series.

    Parameters
    ----------
    rel_tol : float
        Stop once ``|term_k / partial_sum|`` stays below this for three
        consecutive ``k``.
    max_terms : int
        Hard cap on the number of terms.
    log_space : bool
        Accumulate log-magnitudes with explicit signs (recommended); when
        false, terms are formed directly in floating point and may overflow.
    """

    rel_tol: float = 1e-12
    max_terms: int = 20_000
    log_space: bool = True

    def __post_init__(self):
        if not (0.0 < self.rel_tol <= 1e-3):
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 100:
            raise DomainError(f"max_terms must be an integer >= 100, got {self.max_terms}")

    def widened(self, factor: int = 10) -> "SeriesPolicy":
        return SeriesPolicy(self.rel_tol, int(self.max_terms * factor), self.log_space)


DEFAULT_POLICY = SeriesPolicy()


@dataclass(frozen=True)
class DensityValue:
    """Density (or point mass) at one point.

    ``value == exp(log_value)`` whenever ``value > 0``; ``is_atom`` marks a
    probability mass rather than a Lebesgue density.
    """

    value: float
    is_atom: bool
    log_value: float

    @classmethod
    def from_log(cls, log_value: float, is_atom: bool = False) -> "DensityValue":
        log_value = float(log_value)
        return cls(math.exp(log_value) if log_value > -math.inf else 0.0, is_atom, log_value)

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# scalar series


def _policy(policy):
    return DEFAULT_POLICY if policy is None else policy


def _positive_log_terms(p, x, phi):
    alpha = (2.0 - p) / (1.0 - p)
    logz = (alpha * math.log(p - 1.0) - alpha * math.log(x)
            - (1.0 - alpha) * math.log(phi) - math.log(2.0 - p))

    def logterm(k):
        return k * logz - special.gammaln(1.0 + k) - special.gammaln(-alpha * k)

    return logterm


def _sum_positive(p, x, phi, policy):
    """log of sum_j W_j for 1 < p < 2 with the consecutive-term rule."""
    logterm = _positive_log_terms(p, x, phi)
    log_tol = math.log(policy.rel_tol)
    log_s = -math.inf
    streak = 0
    block = 256
    k0 = 1
    while k0 <= policy.max_terms:
        k = np.arange(k0, min(k0 + block, policy.max_terms + 1), dtype=float)
        lt = logterm(k)
        if not policy.log_space:
            with np.errstate(over="ignore"):
                terms = np.exp(lt)
            if not np.all(np.isfinite(terms)):
                raise EvaluationError("series term overflow; enable log_space")
        partial = np.logaddexp.accumulate(np.concatenate(([log_s], lt)))[1:]
        small = lt - partial < log_tol
        for i, flag in enumerate(small):
            streak = streak + 1 if flag else 0
            if streak >= 3:
                return float(partial[i])
        log_s = float(partial[-1])
        k0 += block
        block = min(block * 2, 8192)
    raise SeriesConvergenceError(
        f"series for p={p}, x={x}, phi={phi} not converged in {policy.max_terms} terms",
        partial_sum=math.exp(log_s) / x, terms=policy.max_terms)


def _alternating_parts(p, x, phi):
    """log|b_k|, sign(b_k) as numpy callables plus an mpmath term for a_p = sum b_k / pi."""
    if p > 2:
        alpha = (2.0 - p) / (1.0 - p)
        logz = (alpha * math.log(p - 1.0) + (alpha - 1.0) * math.log(phi)
                - math.log(p - 2.0) - alpha * math.log(x))
        lead = -math.log(x)

        def parts(k):
            s = _sin_pi(k * alpha)
            with np.errstate(divide="ignore"):
                lm = (lead + k * logz + special.gammaln(1.0 + alpha * k)
                      - special.gammaln(1.0 + k) + np.log(np.abs(s)))
            sign = np.where(k % 2 == 1, 1.0, -1.0) * np.sign(s)
            return lm, sign

        def mp_term(k):
            pm = mpmath.mpf(p)
            al = (2 - pm) / (1 - pm)
            z = (pm - 1) ** al * mpmath.mpf(phi) ** (al - 1) / ((pm - 2) * mpmath.mpf(x) ** al)
            return (mpmath.gamma(1 + al * k) / mpmath.factorial(k) * z ** k
                    * (-1) ** (k + 1) * mpmath.sinpi(al * k) / mpmath.mpf(x))

        def integral(_p=p, _x=x, _phi=phi):
            return float(log_a_positive_stable(np.array([_x]), _p, _phi)[0])

        zeta = math.exp(min(logz / (1.0 - alpha), 700.0))
        kpeak = zeta * alpha ** (alpha / (1.0 - alpha))
        digits = kanter_a0(alpha) * zeta / math.log(10.0)
        return parts, mp_term, integral, (kpeak, digits)
    # p < 0: terms in (-x)^k, the leading 1/x absorbed (finite at x = 0)
    alpha = (2.0 - p) / (1.0 - p)
    # scale from the cumulant function: E exp(sY) = exp(C s**alpha)
    c = (math.log(alpha) + (1.0 - alpha) * math.log(phi)
         + (alpha - 1.0) * math.log(alpha - 1.0)) / alpha
    logabsx = math.log(abs(x)) if x != 0 else -math.inf
    sgnx = -1.0 if x > 0 else 1.0  # sign of (-x)

    def parts(k):
        s = _sin_pi(-k / alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            powx = np.where(k == 1, 0.0, (k - 1) * logabsx)
            lm = (powx + k * c + special.gammaln(1.0 + k / alpha)
                  - special.gammaln(1.0 + k) + np.log(np.abs(s)))
        # t_k / x = -(-x)^(k-1) * (...)
        sign = -np.where(k % 2 == 1, 1.0, sgnx) * np.sign(s)
        if x == 0:
            lm = np.where(k == 1, lm, -np.inf)
        return lm, sign

    def mp_term(k):
        pm = mpmath.mpf(p)
        al = (2 - pm) / (1 - pm)
        xm = mpmath.mpf(x)
        base = al * mpmath.mpf(phi) ** (1 - al) * (al - 1) ** (al - 1)
        coef = base ** (k / al) * mpmath.gamma(1 + k / al) / mpmath.factorial(k)
        return -((-xm) ** (k - 1)) * coef * mpmath.sinpi(-k / al)

    def integral():
        return float(log_a_extreme_stable(np.array([x]), p, phi)[0])

    w = abs(x) * math.exp(c)
    kpeak = w ** (alpha / (alpha - 1.0)) if w > 0 else 0.0
    digits = (1.0 - 1.0 / alpha) * kpeak / math.log(10.0)
    return parts, mp_term, integral, (kpeak, digits)


def log_a_extreme_stable(y, p, phi):
    """``log a_p(y; phi)`` for p < 0 from the integral form of the stable law."""
    alpha = (2.0 - p) / (1.0 - p)
    y, phi = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(phi, dtype=float))
    c = phi ** (alpha - 1.0) * (alpha - 1.0) ** (1.0 - alpha) / alpha
    scale = (c * -math.cos(math.pi * alpha / 2.0)) ** (1.0 / alpha)
    return stats.levy_stable.logpdf(y, alpha, -1.0, loc=0.0, scale=scale)


def _sin_pi(t):
    red = np.mod(t, 2.0)
    out = np.sin(np.pi * red)
    return np.where(np.abs(red - np.round(red)) < 1e-12, 0.0, out)


def _sum_alternating(p, x, phi, policy):
    """log of a_p for the alternating series (p > 2 or p < 0)."""
    parts, mp_term, integral, (kpeak, digits) = _alternating_parts(p, x, phi)
    if 2 * kpeak > policy.max_terms or digits > _MAX_DPS:
        # far outside the series' practical range; same function, integral form
        return integral()
    logs, signs = [], []
    peak = -math.inf
    scaled = 0.0
    streak = 0
    stop = None
    k0 = 1
    block = 256
    while k0 <= policy.max_terms and stop is None:
        k = np.arange(k0, min(k0 + block, policy.max_terms + 1), dtype=float)
        lm, sg = parts(k)
        if not policy.log_space:
            with np.errstate(over="ignore"):
                if not np.all(np.isfinite(np.exp(lm[np.isfinite(lm)]))):
                    raise EvaluationError("series term overflow; enable log_space")
        logs.append(lm)
        signs.append(sg)
        for i in range(k.size):
            li = lm[i]
            if li > peak:
                scaled = scaled * math.exp(peak - li) if peak > -math.inf else 0.0
                peak = li
            t = sg[i] * math.exp(li - peak) if li > -math.inf else 0.0
            scaled += t
            small = scaled != 0 and abs(t) < policy.rel_tol * abs(scaled)
            streak = streak + 1 if small else 0
            if streak >= 3:
                stop = k0 + i
                break
        k0 += block
        block = min(block * 2, 8192)
    lm = np.concatenate(logs)
    sg = np.concatenate(signs)
    if stop is None:
        raise SeriesConvergenceError(
            f"alternating series for p={p}, x={x}, phi={phi} not converged in "
            f"{policy.max_terms} terms", partial_sum=_float_sum(lm, sg) / math.pi,
            terms=policy.max_terms)
    lm = lm[:stop]
    sg = sg[:stop]
    top = float(np.max(lm))
    w = np.exp(lm - top)
    total = math.fsum((w * sg).tolist())
    absolute = float(w.sum())
    if total > 0 and absolute / total * _FLOAT_REL_ERR <= policy.rel_tol:
        return top + math.log(total) - math.log(math.pi)
    return _sum_alternating_mp(mp_term, integral, top, absolute, total, stop, policy, p, x, phi)


def _float_sum(lm, sg):
    top = float(np.max(lm))
    try:
        return math.exp(top) * math.fsum((np.exp(lm - top) * sg).tolist())
    except OverflowError:
        return math.nan


_MAX_DPS = 150


def _sum_alternating_mp(mp_term, integral, top, absolute, total, stop, policy, p, x, phi):
    """Re-sum in extended precision until the cancellation is absorbed.

    Past ``_MAX_DPS`` digits the series is hopeless in practice and the
    integral representation of the same stable law is used instead.
    """
    # the integral form gives the size of the answer, hence the digits lost
    estimate = integral()
    lost = (top + math.log(absolute) - estimate - math.log(math.pi)) / math.log(10.0)
    dps = int(30 + max(lost, 0.0) - math.log10(policy.rel_tol))
    for _ in range(6):
        if dps > _MAX_DPS:
            return estimate
        with mpmath.workdps(dps):
            s = mpmath.mpf(0)
            sabs = mpmath.mpf(0)
            streak = 0
            k = 1
            tol = mpmath.mpf(policy.rel_tol)
            while True:
                if k > policy.max_terms:
                    raise SeriesConvergenceError(
                        f"alternating series for p={p}, x={x}, phi={phi} not converged "
                        f"in {policy.max_terms} terms", partial_sum=float(s) / math.pi,
                        terms=policy.max_terms)
                t = mp_term(k)
                s += t
                sabs += abs(t)
                streak = streak + 1 if (s != 0 and abs(t) < tol * abs(s)) else 0
                if streak >= 3 and k >= stop:
                    break
                k += 1
            if s > 0:
                digits_lost = float(mpmath.log10(sabs / s))
                if digits_lost + 10 - math.log10(policy.rel_tol) < dps:
                    return float(mpmath.log(s / mpmath.pi))
                dps = int(digits_lost + 30 - math.log10(policy.rel_tol))
            else:
                dps *= 2
    raise EvaluationError(f"alternating series for p={p}, x={x}, phi={phi} lost all precision")


def _closed_log_a(p, x, phi):
    if p == 0:
        return -0.5 * math.log(2.0 * math.pi * phi) - x * x / (2.0 * phi)
    if p == 2:
        k = 1.0 / phi
        return k * math.log(k) + (k - 1.0) * math.log(x) - math.lgamma(k)
    if p == 3:
        return -0.5 * math.log(2.0 * math.pi * phi * x ** 3) - 1.0 / (2.0 * phi * x)
    raise AssertionError(p)


def _check_support(p, x):
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    sup = as_power(p).support
    if not sup.contains(x) and not (p == 1 and x >= 0):
        raise DomainError(f"x={x} lies outside the support for p={p}")


@functools.lru_cache(maxsize=4096)
def _log_a_cached(p, x, phi, policy, use_closed_form):
    if p == 1:
        r = x / phi
        if r != math.floor(r):
            return -math.inf
        return -r * math.log(phi) - math.lgamma(r + 1.0)
    if 1 < p < 2:
        if x == 0:
            return 0.0
        return _sum_positive(p, x, phi, policy) - math.log(x)
    if p in (0.0, 2.0) or (p == 3 and use_closed_form):
        return _closed_log_a(p, x, phi)
    return _sum_alternating(p, x, phi, policy)


def log_a_series(p, x, phi, policy=None, use_closed_form=True) -> float:
    """Natural log of :func:`a_series`; avoids underflow."""
    p = as_power(p).p
    x = float(x)
    phi = float(phi)
    if not phi > 0:
        raise DomainError(f"dispersion must be positive, got {phi}")
    _check_support(p, x)
    return _log_a_cached(p, x, phi, _policy(policy), bool(use_closed_form))


def a_series(p, x, phi, policy=None, use_closed_form=True) -> float:
    """Base measure ``a_p(x; phi)`` of the Tweedie density.

    Parameters
    ----------
    p : float or PowerParam
    x : float
        Point in the support for power ``p``.
    phi : float
        Dispersion.
    policy : SeriesPolicy, optional
    use_closed_form : bool
        Use the closed forms at p = 0, 2 and 3.  When false, p = 3 is summed
        from its alternating series (p = 0 and 2 have no series).

    Returns
    -------
    float
        For 1 < p < 2 and ``x == 0`` this is the indicator term, 1.

    Raises
    ------
    DomainError
        ``x`` outside the support.
    SeriesConvergenceError
        Truncation rule not met within ``policy.max_terms``.
    """
    return math.exp(log_a_series(p, x, phi, policy, use_closed_form))


def _exponent(p, x, m, phi):
    if p == 0:
        return (x * m - 0.5 * m * m) / phi
    return (x * theta_of_mean(p, m) - kappa_of_mean(p, m)) / phi


def density(spec: ModelSpec, x, policy=None, use_closed_form=True) -> DensityValue:
    """Tweedie density (or mass) at ``x``.

    Off-support points give a zero density.  For 1 < p < 2 the value at 0 is
    the atom ``exp(-m**(2-p) / ((2-p) phi))``; for p = 1 lattice points carry
    probability masses.  A series that fails to converge is retried once
    with ten times the term budget.
    """
    if spec.is_geometric:
        raise DomainError("density() evaluates the Tweedie family; use geom_density_gl")
    p, m, phi = spec.p, spec.mean, spec.dispersion
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x}")
    atom = (p == 1) or (1 < p < 2 and x == 0)
    if not spec.support.contains(x) and not (p == 1 and x >= 0):
        return DensityValue(0.0, atom, -math.inf)
    pol = _policy(policy)
    try:
        la = log_a_series(p, x, phi, pol, use_closed_form)
    except SeriesConvergenceError:
        la = log_a_series(p, x, phi, pol.widened(10), use_closed_form)
    return DensityValue.from_log(la + _exponent(p, x, m, phi), atom)


# ---------------------------------------------------------------------------
# vectorised log-density


def _log_w_positive(y, p, phi):
    """log sum_j W_j(y, phi) for 1 < p < 2, elementwise, y > 0."""
    alpha = (2.0 - p) / (1.0 - p)
    logz = (alpha * math.log(p - 1.0) - alpha * np.log(y)
            - (1.0 - alpha) * np.log(phi) - math.log(2.0 - p))
    jmax = np.exp((2.0 - p) * np.log(y) - np.log(phi)) / (2.0 - p)
    jmax = np.maximum(jmax, 1.0)
    sd = np.sqrt(jmax / (1.0 - alpha))
    half = 10.0 * sd + 15.0

    def logterm(j, rows):
        return (j * logz[rows, None] - special.gammaln(1.0 + j)
                - special.gammaln(-alpha * j))

    return windowed_logsumexp(logterm, jmax, half, lower=1)


def tweedie_logpdf(y, p, mu, phi):
    """Elementwise log-density (log-mass at atoms) of ``Tw_p(mu, phi)``.

    ``y``, ``mu`` and ``phi`` broadcast; ``p`` is a scalar.  Points outside
    the support give ``-inf``.
    """
    p = as_power(p).p
    y, mu, phi = np.broadcast_arrays(np.asarray(y, dtype=float),
                                     np.asarray(mu, dtype=float),
                                     np.asarray(phi, dtype=float))
    shape = y.shape
    y, mu, phi = y.ravel(), mu.ravel(), phi.ravel()
    out = np.full(y.size, -np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if p == 0:
            out = -0.5 * np.log(2 * np.pi * phi) - (y - mu) ** 2 / (2 * phi)
        elif p == 1:
            r = y / phi
            lattice = (y >= 0) & (r == np.floor(r))
            lam = mu / phi
            out = np.where(lattice, stats.poisson.logpmf(np.where(lattice, r, 0), lam), -np.inf)
        elif 1 < p < 2:
            lam = mu ** (2 - p) / ((2 - p) * phi)
            zero = y == 0
            out[zero] = -lam[zero]
            pos = y > 0
            if np.any(pos):
                yp, mp_, fp = y[pos], mu[pos], phi[pos]
                theta = mp_ ** (1 - p) / (1 - p)
                out[pos] = (_log_w_positive(yp, p, fp) - np.log(yp)
                            + (yp * theta - lam[pos] * fp) / fp)
        elif p == 2:
            k = 1.0 / phi
            out = gamma_logpdf(y, k, mu)
        elif p == 3:
            pos = y > 0
            yp = np.where(pos, y, 1.0)
            val = (-0.5 * np.log(2 * np.pi * phi * yp ** 3)
                   - (yp - mu) ** 2 / (2 * phi * mu ** 2 * yp))
            out = np.where(pos, val, -np.inf)
        elif p > 2:
            pos = y > 0
            if np.any(pos):
                yp, mp_, fp = y[pos], mu[pos], phi[pos]
                # theta / phi and kappa / phi in logs: mu and phi may be extreme
                lm, lf = np.log(mp_), np.log(fp)
                expo = (-yp * np.exp((1 - p) * lm - lf) / (p - 1)
                        + np.exp((2 - p) * lm - lf) / (p - 2))
                out[pos] = log_a_positive_stable(yp, p, fp) + expo
        else:
            theta = mu ** (1 - p) / (1 - p)
            kappa = mu ** (2 - p) / (2 - p)
            la = np.array([_log_a_cached(p, float(a), float(b), DEFAULT_POLICY, True)
                           for a, b in zip(y, phi)])
            out = la + (y * theta - kappa) / phi
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# distribution functions


def _cdf_poisson_gamma(y, p, mu, phi):
    """Exact CDF for 1 < p < 2 as a Poisson mixture of gamma CDFs."""
    lam = mu ** (2 - p) / ((2 - p) * phi)
    tau = (2 - p) / (p - 1)
    gam = phi * (p - 1) * mu ** (p - 1)
    out = np.where(y >= 0, np.exp(-lam), 0.0)
    pos = np.flatnonzero(y > 0)
    if pos.size == 0:
        return out
    lp, yp, gp = lam[pos], y[pos], gam[pos]
    lo = np.maximum(1.0, np.floor(lp - 12 * np.sqrt(lp) - 12))
    hi = np.ceil(lp + 12 * np.sqrt(lp) + 12)
    span = (hi - lo + 1).astype(int)
    acc = np.zeros(pos.size)
    step = max(1, 2_000_000 // max(1, int(span.max())))
    for s in range(0, pos.size, step):
        sl = slice(s, s + step)
        K = int(span[sl].max())
        j = lo[sl, None] + np.arange(K)[None, :]
        valid = j <= hi[sl, None]
        w = np.where(valid, stats.poisson.pmf(j, lp[sl, None]), 0.0)
        g = special.gammainc(j * tau, (yp[sl] / gp[sl])[:, None])
        acc[sl] = np.sum(w * g, axis=1)
    out[pos] += acc
    return np.minimum(out, 1.0)


def _tail_points(p, mu, phi):
    """Lower and upper ends of the effective support for p > 2."""
    alpha = (2.0 - p) / (1.0 - p)
    theta = mu ** (1 - p) / (1 - p)
    kappa = mu ** (2 - p) / (2 - p)
    vi = phi * mu ** (p - 2.0)
    from ._stable import stable_scale

    c = stable_scale(p, phi)
    zeta_hi = (120.0 + abs(kappa) / phi) / kanter_a0(alpha)
    y_lo = c * zeta_hi ** (-(1.0 - alpha) / alpha)
    y_lo = min(y_lo, mu * 1e-6)
    y_hi = mu * (1.0 + 40.0 * math.sqrt(vi)) + 120.0 * phi / abs(theta)
    return y_lo, y_hi, vi


def log_grid_nodes(center, y_lo, y_hi, rel_sd, extra=(), coarse=0.1, fine_div=8.0):
    """Panel edges in ``t = log y`` refined around ``log(center)``."""
    t_lo, t_hi = math.log(y_lo), math.log(y_hi)
    s = min(max(rel_sd, 1e-8), 1.0)
    h_fine = min(coarse, s / fine_div)
    c = math.log(center)
    f_lo, f_hi = max(t_lo, c - 25 * s), min(t_hi, c + 25 * s)
    pieces = [np.linspace(t_lo, f_lo, max(2, int(math.ceil((f_lo - t_lo) / coarse)) + 1)),
              np.linspace(f_lo, f_hi, max(2, int(math.ceil((f_hi - f_lo) / h_fine)) + 1)),
              np.linspace(f_hi, t_hi, max(2, int(math.ceil((t_hi - f_hi) / coarse)) + 1))]
    edges = np.concatenate(pieces + [np.asarray(extra, dtype=float)])
    edges = edges[(edges >= t_lo) & (edges <= t_hi)]
    return np.unique(edges)


def integrate_log_grid(logpdf, edges, order=10):
    """Cumulative integral of ``exp(logpdf(y))`` over panels in ``t = log y``.

    Returns the cumulative mass at every edge (starting at 0).
    """
    gx, gw = legendre_rule(order)
    a, b = edges[:-1], edges[1:]
    h = b - a
    t = a[:, None] + h[:, None] * (gx + 1.0) / 2.0
    vals = np.exp(t + logpdf(np.exp(t).ravel()).reshape(t.shape))
    panel = (vals * gw).sum(axis=1) * h / 2.0
    return np.concatenate(([0.0], np.cumsum(panel)))


def _cdf_positive_stable(y, p, mu, phi):
    """CDF for general p > 2 with scalar parameters by log-grid quadrature."""
    y_lo, y_hi, vi = _tail_points(p, mu, phi)
    ys = np.asarray(y, dtype=float)
    out = np.zeros(ys.shape)
    inside = (ys > y_lo) & (ys < y_hi)
    out[ys >= y_hi] = 1.0
    targets = np.log(ys[inside])
    edges = log_grid_nodes(mu, y_lo, y_hi, math.sqrt(vi), extra=targets)

    def lp(v):
        return tweedie_logpdf(v, p, mu, phi)

    cum = integrate_log_grid(lp, edges)
    if abs(cum[-1] - 1.0) > 1e-6:
        raise EvaluationError(f"p={p} density integrates to {cum[-1]} on its grid")
    pos = np.searchsorted(edges, targets)
    out[inside] = np.minimum(cum[pos], 1.0)
    return out


def _cdf_extreme_stable(y, p, mu, phi):
    spec = ModelSpec.tweedie(p, mu, phi)

    def f(t):
        return density(spec, t).value

    out = []
    theta = mu ** (1 - p) / (1 - p)
    lower = mu - 45.0 * (math.sqrt(phi * mu ** p) + phi / theta)
    for v in np.ravel(y):
        if v <= lower:
            out.append(0.0)
            continue
        val, err = integrate.quad(f, lower, float(v), epsabs=1e-10, limit=200)
        if err > 1e-8:
            raise EvaluationError(f"quadrature failed for p={p} at x={v}")
        out.append(val)
    return np.clip(np.array(out).reshape(np.shape(y)), 0.0, 1.0)


def tweedie_cdf(y, p, mu, phi):
    """Elementwise CDF of ``Tw_p(mu, phi)`` (``y`` and parameters broadcast)."""
    p = as_power(p).p
    y, mu, phi = np.broadcast_arrays(np.asarray(y, dtype=float),
                                     np.asarray(mu, dtype=float),
                                     np.asarray(phi, dtype=float))
    shape = y.shape
    y, mu, phi = y.ravel(), mu.ravel(), phi.ravel()
    if p == 0:
        out = stats.norm.cdf(y, mu, np.sqrt(phi))
    elif p == 1:
        out = np.where(y >= 0, stats.poisson.cdf(np.floor(y / phi + 1e-9), mu / phi), 0.0)
    elif 1 < p < 2:
        out = _cdf_poisson_gamma(y, p, mu, phi)
    elif p == 2:
        out = np.where(y > 0, special.gammainc(1.0 / phi, np.maximum(y, 0) / (mu * phi)), 0.0)
    elif p == 3:
        # inverse Gaussian with mean mu and shape 1/phi
        pos = y > 0
        yp = np.where(pos, y, 1.0)
        out = np.where(pos, stats.invgauss.cdf(yp, mu * phi, scale=1.0 / phi), 0.0)
    elif p > 2:
        out = np.empty(y.size)
        keys = np.stack([mu, phi], axis=1)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        inv = inv.ravel()
        for g, (m_, f_) in enumerate(uniq):
            sel = inv == g
            out[sel] = _cdf_positive_stable(y[sel], p, m_, f_)
    else:
        out = np.empty(y.size)
        for i in range(y.size):
            out[i] = _cdf_extreme_stable(y[i:i + 1], p, mu[i], phi[i])[0]
    return out.reshape(shape)


def cdf(spec: ModelSpec, x, policy=None) -> float:
    """Distribution function ``P(X <= x)`` of a Tweedie model."""
    if spec.is_geometric:
        raise DomainError("cdf() evaluates the Tweedie family; use geom_cdf")
    return float(tweedie_cdf(float(x), spec.p, spec.mean, spec.dispersion))


def _bracket_cap(spec):
    p, m, phi = spec.p, spec.mean, spec.dispersion
    expo = max(1.0, 1.0 / (2.0 - p)) if p < 2 else 1.0
    return 1e3 * max(abs(m), 1.0) * max(1.0, phi) ** expo


def quantile(spec: ModelSpec, u: float, policy=None) -> float:
    """Smallest ``x`` with ``cdf(x) >= u``."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u}")
    p, m = spec.p, spec.mean
    F = functools.partial(cdf, spec)
    if 1 < p < 2 and u <= math.exp(-m ** (2 - p) / ((2 - p) * spec.dispersion)):
        return 0.0
    cap = _bracket_cap(spec)
    if p <= 0:
        lo, hi = m - 1.0, m + 1.0
        while F(lo) > u:
            lo = m - 2.0 * (m - lo)
            if m - lo > cap:
                raise EvaluationError("quantile bracket expansion exceeded its cap")
    else:
        lo, hi = 0.0, max(m, 1e-12)
    while F(hi) < u:
        hi *= 2.0
        if hi > cap:
            raise EvaluationError("quantile bracket expansion exceeded its cap")
    if p == 1:
        phi = spec.dispersion
        k = math.ceil(hi / phi)
        while k > 0 and F((k - 1) * phi) >= u:
            k -= 1
        return k * phi
    return optimize.brentq(lambda v: F(v) - u, lo, hi, xtol=1e-10, rtol=4 * np.finfo(float).eps,
                           maxiter=500)


# ---------------------------------------------------------------------------
# sampling


class _InverseTable:
    """Inverse CDF for p > 2.

    ``F`` and ``dF/dt`` are known exactly at the edges of a fine grid in
    ``t = log y``; within a panel ``F`` is the cubic Hermite interpolant,
    which is inverted by bisection.  The interpolation error in ``F`` is
    below 1e-9 at the grid spacing used.
    """

    def __init__(self, p, mu, phi):
        self.p, self.mu, self.phi = p, mu, phi
        y_lo, y_hi, vi = _tail_points(p, mu, phi)
        edges = log_grid_nodes(mu, y_lo, y_hi, math.sqrt(vi), coarse=0.025, fine_div=16.0)
        cum = integrate_log_grid(self._logpdf, edges)
        total = cum[-1]
        if abs(total - 1.0) > 1e-6:
            raise EvaluationError(f"p={p} density integrates to {total} on its grid")
        self.edges = edges
        self.cum = cum / total
        self.slope = np.exp(edges + self._logpdf(np.exp(edges))) / total

    def _logpdf(self, y):
        return tweedie_logpdf(y, self.p, self.mu, self.phi)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        k = np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, self.edges.size - 2)
        h = self.edges[k + 1] - self.edges[k]
        f0, f1 = self.cum[k], self.cum[k + 1]
        d0, d1 = self.slope[k] * h, self.slope[k + 1] * h
        lo = np.zeros_like(u)
        hi = np.ones_like(u)
        for _ in range(45):
            s = 0.5 * (lo + hi)
            s2 = s * s
            s3 = s2 * s
            val = (f0 * (2 * s3 - 3 * s2 + 1) + d0 * (s3 - 2 * s2 + s)
                   + f1 * (3 * s2 - 2 * s3) + d1 * (s3 - s2))
            below = val < u
            lo = np.where(below, s, lo)
            hi = np.where(below, hi, s)
        return np.exp(self.edges[k] + 0.5 * (lo + hi) * h)


@functools.lru_cache(maxsize=64)
def _inverse_table(p, mu, phi):
    return _InverseTable(p, mu, phi)


def _generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_tweedie(rng, p, mu, phi, size=None):
    """Draws from ``Tw_p(mu, phi)`` with array parameters where supported."""
    if p == 0:
        return rng.normal(mu, np.sqrt(phi), size)
    if 1 < p < 2:
        lam = mu ** (2 - p) / ((2 - p) * phi)
        tau = (2 - p) / (p - 1)
        gam = phi * (p - 1) * mu ** (p - 1)
        n = np.asarray(rng.poisson(lam, size))
        out = np.zeros(n.shape)
        hit = n > 0
        out[hit] = rng.gamma(n[hit] * tau, np.broadcast_to(gam, n.shape)[hit])
        return out
    if p == 2:
        return _clamp_positive(rng.gamma(1.0 / phi, mu * phi, size))
    if p == 3:
        return _clamp_positive(rng.wald(mu, 1.0 / phi, size))
    if p > 2:
        if np.ndim(mu) or np.ndim(phi):
            raise DomainError("inversion sampling needs scalar parameters")
        u = rng.random(size)
        return _clamp_positive(_inverse_table(float(p), float(mu), float(phi))(np.atleast_1d(u)).reshape(np.shape(u)))
    raise DomainError(f"sampling is not available for p={p}")


def _clamp_positive(x):
    return np.maximum(x, _TINY)


def sample(spec: ModelSpec, n: int, rng_seed=None) -> np.ndarray:
    """``n`` i.i.d. draws from a Tweedie model.

    Parameters
    ----------
    spec : ModelSpec
        Tweedie family with p = 0 or p > 1.
    n : int
    rng_seed : int or numpy.random.Generator, optional

    Returns
    -------
    numpy.ndarray of shape (n,)
    """
    if spec.is_geometric:
        raise DomainError("sample() draws Tweedie variates; use geom_sample")
    p = spec.p
    if not (p == 0 or p > 1):
        raise DomainError(f"sampling is not available for p={p}")
    n = int(n)
    if n < 0:
        raise DomainError("n must be non-negative")
    rng = _generator(rng_seed)
    if n == 0:
        return np.empty(0)
    return np.asarray(sample_tweedie(rng, p, spec.mean, spec.dispersion, n), dtype=float)
