"""Dip-style unimodality test for trait samples.

Statistic: over candidate mode positions m, fit the empirical CDF by a
function convex left of m and concave right of m (each side's minimax fit is
half the largest gap to its convex/concave hull); the statistic is the
minimized worst-side deviation.  It is zero-ish for unimodal samples and
grows with the trough depth between modes.  Significance is calibrated by
bootstrap against the uniform null, as usual for dip-type tests.
"""
from __future__ import annotations

import numpy as np


def _max_hull_gap(xs, fs, concave=False):
    """Largest vertical gap between the points and their lower convex hull
    (or upper concave hull when ``concave``)."""
    if len(xs) < 3:
        return 0.0
    ys = -fs if concave else fs
    hull_i = [0]
    for i in range(1, len(xs)):
        while len(hull_i) >= 2:
            i0, i1 = hull_i[-2], hull_i[-1]
            cross = ((xs[i1] - xs[i0]) * (ys[i] - ys[i0])
                     - (ys[i1] - ys[i0]) * (xs[i] - xs[i0]))
            if cross <= 0.0:
                hull_i.pop()
            else:
                break
        hull_i.append(i)
    hx = xs[hull_i]
    hy = ys[hull_i]
    hull_vals = np.interp(xs, hx, hy)
    return float(np.max(ys - hull_vals))


def dip_statistic(sample) -> float:
    xs = np.sort(np.asarray(sample, dtype=float))
    n = xs.size
    if n < 8 or xs[0] == xs[-1]:
        return 0.0
    xs = xs + 1e-12 * (xs[-1] - xs[0]) * np.arange(n)  # break ties
    fs = (np.arange(n) + 0.5) / n

    def d_left(m):
        return 0.5 * _max_hull_gap(xs[: m + 1], fs[: m + 1], concave=False)

    def d_right(m):
        return 0.5 * _max_hull_gap(xs[m:], fs[m:], concave=True)

    # d_left grows with m, d_right shrinks: scan the crossing by bisection
    lo, hi = 1, n - 2
    while hi - lo > 2:
        mid = (lo + hi) // 2
        if d_left(mid) < d_right(mid):
            lo = mid
        else:
            hi = mid
    return min(max(d_left(m), d_right(m)) for m in range(max(1, lo - 2),
                                                         min(n - 1, hi + 3)))


_NULL_CACHE = {}


def dip_test(sample, n_boot=200, rng=None):
    """(statistic, p-value) against the unimodal (uniform-calibrated) null.

    The null distribution depends only on the sample size; it is bootstrapped
    once per (size, n_boot) and cached.
    """
    rng = rng or np.random.default_rng(0)
    sample = np.asarray(sample, dtype=float)
    obs = dip_statistic(sample)
    n = sample.size
    key = (n, n_boot)
    if key not in _NULL_CACHE:
        null_rng = np.random.default_rng(20_250_000 + n)
        _NULL_CACHE[key] = np.array(
            [dip_statistic(null_rng.uniform(size=n)) for _ in range(n_boot)])
    boots = _NULL_CACHE[key]
    p = (1.0 + np.sum(boots >= obs)) / (n_boot + 1.0)
    return obs, float(p)


def modes_from_histogram(sample, bins=40):
    """Locations of local maxima of a coarse histogram (diagnostic helper)."""
    counts, edges = np.histogram(sample, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    out = []
    for i in range(len(counts)):
        left = counts[i - 1] if i > 0 else -1
        right = counts[i + 1] if i < len(counts) - 1 else -1
        if counts[i] > left and counts[i] >= right and counts[i] > 0:
            out.append((centers[i], counts[i]))
    return out
