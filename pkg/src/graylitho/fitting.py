"""Monotone curve-fitting primitives: pool-adjacent-violators and monotone cubic Hermite."""

import numpy as np

__all__ = ["isotonic_regression", "pchip_slopes", "hermite_eval", "pooled_blocks"]


def pooled_blocks(y, weights=None):
    """Run pool-adjacent-violators on ``y``.

    Returns ``(starts, ends, values, weights)`` describing the pooled blocks;
    block ``k`` covers ``y[starts[k]:ends[k]]`` and takes the weighted mean
    ``values[k]``.
    """
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    starts, ends, sums, wsum = [], [], [], []
    for i, (yi, wi) in enumerate(zip(y, w)):
        starts.append(i)
        ends.append(i + 1)
        sums.append(yi * wi)
        wsum.append(wi)
        # Merge backwards while the previous block mean exceeds the current one.
        while len(sums) > 1 and sums[-2] * wsum[-1] > sums[-1] * wsum[-2]:
            s, w_, e = sums.pop(), wsum.pop(), ends.pop()
            starts.pop()
            sums[-1] += s
            wsum[-1] += w_
            ends[-1] = e
    values = np.array(sums) / np.array(wsum)
    return np.array(starts, dtype=int), np.array(ends, dtype=int), values, np.array(wsum)


def isotonic_regression(y, weights=None):
    """Least-squares non-decreasing fit to ``y`` (weighted)."""
    y = np.asarray(y, dtype=float)
    if y.size <= 1:
        return y.copy()
    starts, ends, values, _ = pooled_blocks(y, weights)
    return np.repeat(values, ends - starts)


def _three_point(h0, h1, d0, d1):
    # Derivative at the first of three knots of the parabola through them.
    return ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)


def pchip_slopes(x, y):
    """Knot derivatives of a shape-preserving piecewise cubic Hermite interpolant.

    Starts from the parabolic three-point estimate at every knot (exact for
    quadratic data), zeroes it at local extrema and flat segments, then
    shrinks slope pairs that leave the Fritsch-Carlson monotonicity circle
    ``alpha**2 + beta**2 <= 9``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = np.diff(x)
    delta = np.diff(y) / h
    n = len(x)
    if n == 2:
        return np.array([delta[0], delta[0]])
    d0, d1 = delta[:-1], delta[1:]
    m = np.empty(n)
    m[1:-1] = (h[1:] * d0 + h[:-1] * d1) / (h[:-1] + h[1:])
    m[1:-1][d0 * d1 <= 0] = 0.0
    m[0] = _three_point(h[0], h[1], delta[0], delta[1])
    m[-1] = _three_point(h[-1], h[-2], delta[-1], delta[-2])
    for end, d in ((0, delta[0]), (-1, delta[-1])):
        if np.sign(m[end]) != np.sign(d):
            m[end] = 0.0
    for k, d in enumerate(delta):
        if d == 0:
            m[k] = m[k + 1] = 0.0
            continue
        # Same test as alpha**2 + beta**2 > 9, written without dividing by d.
        r = np.hypot(m[k], m[k + 1])
        if r > 3 * abs(d):
            scale = 3 * abs(d) / r
            m[k] *= scale
            m[k + 1] *= scale
    return m


def hermite_eval(x, y, m, xq):
    """Evaluate the cubic Hermite interpolant with knots ``(x, y)`` and slopes ``m``.

    Written as the secant line plus a cubic correction so that segments
    with slopes equal to their secant evaluate as exact straight lines.
    ``xq`` is clamped to ``[x[0], x[-1]]``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = np.asarray(m, dtype=float)
    xq = np.clip(np.asarray(xq, dtype=float), x[0], x[-1])
    k = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, len(x) - 2)
    h = x[k + 1] - x[k]
    dy = y[k + 1] - y[k]
    secant = dy / h
    t = (xq - x[k]) / h
    a = m[k] - secant
    b = m[k + 1] - secant
    return y[k] + t * dy + h * t * (1 - t) * (a * (1 - t) - b * t)
