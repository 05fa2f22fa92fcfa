"""Sequential O(n) scan kernels, JIT-compiled with numba.

These are the only loops in the package that cannot be vectorized: each step
re-anchors a running exponential sum at the current element, which keeps every
exponent nonpositive. fastmath stays off so exp() is IEEE-conformant and runs
are reproducible within a build.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["anchored_coefficients", "locate_segments", "exp_kernel_weighted"]


@njit(cache=True, nogil=True)
def anchored_coefficients(r, scale):
    """Anchored prefix/suffix exponential sums and per-element CDF-sum values.

    Args:
        r: scores sorted ascending, shape (n,).
        scale: positive scale.

    Returns:
        (prefix, suffix, segment_values) where
        prefix[j]  = sum_{i <= j} exp((r[i] - r[j]) / scale),
        suffix[j]  = sum_{i >= j} exp((r[j] - r[i]) / scale),
        segment_values[j] = CDF sum evaluated at r[j].
        All recursion exponents are differences of sorted neighbours, so they
        never exceed zero and the running sums stay in [1, n].
    """
    n = r.shape[0]
    prefix = np.empty(n, np.float64)
    suffix = np.empty(n, np.float64)
    seg = np.empty(n, np.float64)
    prefix[0] = 1.0
    for j in range(1, n):
        prefix[j] = 1.0 + np.exp((r[j - 1] - r[j]) / scale) * prefix[j - 1]
    suffix[n - 1] = 1.0
    for j in range(n - 2, -1, -1):
        suffix[j] = 1.0 + np.exp((r[j] - r[j + 1]) / scale) * suffix[j + 1]
    for j in range(n - 1):
        step = np.exp((r[j] - r[j + 1]) / scale)
        seg[j] = (j + 1) - 0.5 * prefix[j] + 0.5 * suffix[j + 1] * step
    seg[n - 1] = n - 0.5 * prefix[n - 1]
    return prefix, suffix, seg


@njit(cache=True, nogil=True)
def locate_segments(seg, targets):
    """Rightmost segment index j with seg[j] <= target, else -1, per target.

    Both inputs ascending; two-pointer merge, O(n + L).
    """
    n = seg.shape[0]
    out = np.empty(targets.shape[0], np.int64)
    j = -1
    for m in range(targets.shape[0]):
        t = targets[m]
        while j + 1 < n and seg[j + 1] <= t:
            j += 1
        out[m] = j
    return out


@njit(cache=True, nogil=True)
def exp_kernel_weighted(targets, sources, weights, scale):
    """out[m] = sum_s weights[s] * exp(-|targets[m] - sources[s]| / scale).

    Both ``targets`` and ``sources`` must be ascending. Two anchored sweeps
    (sources at or below the target, then sources above it) cover each source
    exactly once and keep every exponent <= 0, so nothing overflows no matter
    how small the scale is. O(n + L) for n sources and L targets.
    """
    L = targets.shape[0]
    n = sources.shape[0]
    out = np.zeros(L, np.float64)

    acc = 0.0
    i = 0
    prev = 0.0
    for m in range(L):
        t = targets[m]
        if m > 0:
            acc *= np.exp((prev - t) / scale)
        while i < n and sources[i] <= t:
            acc += np.exp((sources[i] - t) / scale) * weights[i]
            i += 1
        out[m] = acc
        prev = t

    acc = 0.0
    i = n - 1
    prev = 0.0
    for m in range(L - 1, -1, -1):
        t = targets[m]
        if m < L - 1:
            acc *= np.exp((t - prev) / scale)
        while i >= 0 and sources[i] > t:
            acc += np.exp((t - sources[i]) / scale) * weights[i]
            i -= 1
        out[m] += acc
        prev = t
    return out
