"""Vectorised numerical building blocks shared by the density modules."""
from __future__ import annotations

import functools

import numpy as np
from scipy import special

_DENSE_LIMIT = 2000
_CHUNK_CELLS = 2_000_000


@functools.lru_cache(maxsize=None)
def legendre_rule(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_nodes(a, b, panels: int, order: int = 10):
    """Composite Gauss-Legendre nodes and weights on rows of intervals.

    ``a`` and ``b`` are 1-D arrays of interval ends (``b >= a``).  Returns
    ``(nodes, weights)`` each of shape ``(len(a), panels * order)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    gx, gw = legendre_rule(order)
    frac = np.linspace(0.0, 1.0, panels + 1)
    edges = a[:, None] + (b - a)[:, None] * frac[None, :]
    lo = edges[:, :-1]
    h = edges[:, 1:] - lo
    nodes = lo[:, :, None] + h[:, :, None] * (gx + 1.0) / 2.0
    weights = h[:, :, None] * gw / 2.0
    return nodes.reshape(len(a), -1), weights.reshape(len(a), -1)


def log_weighted_sum(log_values, weights, axis=-1):
    """``log(sum(w * exp(log_values)))`` for non-negative weights."""
    weights = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        lw = np.where(weights > 0, np.log(np.where(weights > 0, weights, 1.0)), -np.inf)
    total = log_values + lw
    return special.logsumexp(total, axis=axis)


def windowed_logsumexp(logterm, center, halfwidth, lower=1):
    """Log of ``sum_{j >= lower} exp(logterm(j, rows))`` for log-concave terms.

    The terms are assumed unimodal around ``center`` with almost all of their
    mass inside ``center +/- halfwidth``.  Each row sums its own integer window;
    the window is widened until both edge terms are 45 nats below the peak.
    Rows whose window exceeds ``_DENSE_LIMIT`` terms are summed by replacing
    the sum with the integral of the (smooth, wide) summand, which agrees with
    the sum to far below double precision once the peak spans thousands of
    integers.

    ``logterm(j, rows)`` receives a float array ``j`` of shape (len(rows), K)
    and the integer row indices, and must return log terms of the same shape.
    """
    center = np.asarray(center, dtype=float)
    halfwidth = np.asarray(halfwidth, dtype=float)
    out = np.empty(center.shape, dtype=float)
    pending = np.arange(center.size)
    width = halfwidth.copy()
    for _ in range(8):
        if pending.size == 0:
            break
        lo = np.maximum(lower, np.floor(center[pending] - width[pending]))
        hi = np.maximum(lo, np.ceil(center[pending] + width[pending]))
        span = (hi - lo + 1).astype(np.int64)
        retry = []
        dense = span <= _DENSE_LIMIT
        for sel, fn in ((np.flatnonzero(dense), _dense_window),
                        (np.flatnonzero(~dense), _integral_window)):
            if sel.size == 0:
                continue
            vals, ok = fn(logterm, pending[sel], lo[sel], hi[sel], lower)
            out[pending[sel[ok]]] = vals[ok]
            retry.append(pending[sel[~ok]])
        pending = np.concatenate(retry) if retry else np.array([], dtype=int)
        width[pending] = 2.0 * width[pending] + 10.0
    if pending.size:
        raise ArithmeticError("series window failed to capture the peak")
    return out


def _dense_window(logterm, rows, lo, hi, lower):
    span = (hi - lo + 1).astype(np.int64)
    vals = np.empty(rows.size)
    ok = np.ones(rows.size, dtype=bool)
    order = np.argsort(span, kind="stable")
    start = 0
    while start < rows.size:
        # rows sorted by span: take as many as fit in the cell budget
        stop = start + 1
        while stop < rows.size and span[order[stop]] * (stop - start + 1) <= _CHUNK_CELLS:
            stop += 1
        idx = order[start:stop]
        width = int(span[idx].max())
        j = lo[idx, None] + np.arange(width)[None, :]
        valid = j <= hi[idx, None]
        lt = logterm(np.where(valid, j, lo[idx, None]), rows[idx])
        lt = np.where(valid, lt, -np.inf)
        peak = lt.max(axis=1)
        vals[idx] = special.logsumexp(lt, axis=1)
        right = lt[np.arange(idx.size), span[idx] - 1]
        left_ok = (lo[idx] <= lower) | (lt[:, 0] < peak - 45.0)
        ok[idx] = left_ok & (right < peak - 45.0) & np.isfinite(peak)
        start = stop
    return vals, ok


def _integral_window(logterm, rows, lo, hi, lower):
    lo_c = np.maximum(lo - 0.5, lower - 0.5)
    hi_c = hi + 0.5
    nodes, weights = composite_nodes(lo_c, hi_c, panels=40, order=12)
    lt = logterm(nodes, rows)
    vals = log_weighted_sum(lt, weights, axis=1)
    peak = lt.max(axis=1)
    left_ok = (lo <= lower) | (lt[:, 0] < peak - 45.0)
    right_ok = lt[:, -1] < peak - 45.0
    return vals, left_ok & right_ok & np.isfinite(peak)


_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def stirling_error(a):
    """``gammaln(a) - ((a - 1/2) log a - a + log(2 pi) / 2)`` for ``a > 0``."""
    a = np.asarray(a, dtype=float)
    big = a > 15.0
    ab = np.where(big, a, 1.0)
    r = 1.0 / (ab * ab)
    series = (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r / 1680.0))) / ab
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = special.gammaln(a) - ((a - 0.5) * np.log(a) - a + _HALF_LOG_2PI)
    return np.where(big, series, direct)


def log1pmx_neg(u):
    """``u - log1p(u)`` without cancellation near ``u = 0``."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < 0.1
    us = np.where(small, u, 0.0)
    term = us * us / 2.0
    acc = term.copy()
    power = us * us
    for k in range(3, 26):
        power = power * us
        acc = acc + (-1.0) ** k * power / k
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = u - np.log1p(u)
    return np.where(small, acc, direct)


def gamma_logpdf(y, shape, mean):
    """Gamma log-density in saddle-point form, accurate for very large shapes."""
    y, a, mu = np.broadcast_arrays(np.asarray(y, dtype=float),
                                   np.asarray(shape, dtype=float),
                                   np.asarray(mean, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = y / mu
        # r - 1 - log(r), with the log taken apart so tiny ratios stay finite
        d = np.where(np.abs(r - 1.0) < 0.1, log1pmx_neg(r - 1.0),
                     r - 1.0 - (np.log(y) - np.log(mu)))
        out = (-np.log(y) + 0.5 * np.log(a) - _HALF_LOG_2PI - stirling_error(a) - a * d)
    return np.where(y > 0, out, -np.inf)
