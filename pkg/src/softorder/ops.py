"""Differentiable order operations built on the CDF-sum core.

All four ops share one pipeline: prepare the scores once (O(n log n)), then
evaluate or invert the monotone CDF sum. Outputs retain whatever state the
analytic derivatives in :mod:`softorder.grad` need, so a forward pass is never
recomputed for a backward product.

Direction convention: alpha > 0 treats large scores as "late" (ascending
order, ranks count scores softly below); alpha < 0 flips to descending. The
selection in :func:`soft_topk` always covers the max side for alpha < 0 and
the min side for alpha > 0 at the same k; the pinned examples in the tests fix
the convention.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionMismatch,
    KOutOfRange,
    Prepared,
    SoftOrderError,
    ZeroScale,
    cdf_sum_inverse,
    cdf_sum_inverse_sorted,
    laplace_cdf,
    prepare,
)

__all__ = [
    "SoftSelection",
    "SoftRanks",
    "SoftSorted",
    "DoublyStochastic",
    "soft_topk",
    "soft_rank",
    "soft_sort",
    "soft_permutation",
    "batch_map",
]


@dataclass(frozen=True)
class SoftSelection:
    """Soft top-k membership probabilities with reusable backward state.

    Attributes:
        probs: per-element selection probabilities, sum equals k exactly in
            real arithmetic (to rounding in floats); each lies in (0, 1).
        threshold: the level where the CDF sum equals k.
        k: requested mass in (0, n).
        alpha: signed scale.
        scores: the input scores, original order.
        density: Laplace density weights at the threshold, nonnegative,
            min(p, 1-p)/|alpha| elementwise.
        density_sum: their sum (the reciprocal of |d threshold / d k|).
        softmax_weights: the densities normalized to sum one; this is the
            softmax of -|threshold - scores|/|alpha| and stays well defined
            even when every density underflows.
        prepared: the sorted-score preprocessing, kept for derivative reuse.
    """

    probs: np.ndarray
    threshold: float
    k: float
    alpha: float
    scores: np.ndarray
    density: np.ndarray
    density_sum: float
    softmax_weights: np.ndarray
    prepared: Prepared


@dataclass(frozen=True)
class SoftRanks:
    """Soft ranks, one per element in input order; sum is n(n-1)/2 exactly."""

    ranks: np.ndarray
    alpha: float
    prepared: Prepared


@dataclass(frozen=True)
class SoftSorted:
    """Soft sorted values: the inverse CDF sum on the half-integer grid.

    Strictly increasing for alpha > 0, strictly decreasing for alpha < 0.
    """

    values: np.ndarray
    alpha: float
    prepared: Prepared


@dataclass(frozen=True)
class DoublyStochastic:
    """Soft permutation matrix; entry (i, j) is the mass of element i in rank
    band j, so rows index elements and columns index rank positions.

    Rows and columns each sum to one. ``inner_thresholds`` holds the n - 1
    finite band edges (levels where the CDF sum hits 1 .. n-1), retained for
    the backward pass.
    """

    entries: np.ndarray
    alpha: float
    inner_thresholds: np.ndarray
    prepared: Prepared


def soft_topk(scores, k: float, alpha: float) -> SoftSelection:
    """Differentiable top-k selection.

    Solves cdf_sum(x) = k for the threshold, then scores each element by the
    Laplace CDF of its signed distance to the threshold. For alpha < 0 the
    probability mass concentrates on the k largest scores as alpha -> 0-, for
    alpha > 0 on the k smallest.

    Args:
        scores: finite 1-D sequence.
        k: requested total mass, strictly inside (0, n).
        alpha: nonzero scale.

    O(n log n); the probabilities conserve mass: sum(probs) == k up to
    rounding, because the threshold is the exact root.
    """
    prep = prepare(scores, alpha)
    kk = float(k)
    if not 0.0 < kk < prep.n:
        raise KOutOfRange(f"k must lie in the open interval (0, {prep.n}), got {k!r}")
    threshold = cdf_sum_inverse(prep, kk)
    arr = prep.original_scores()
    z = (threshold - arr) / prep.alpha
    probs = laplace_cdf(z)
    abs_z = np.abs(z)
    density = 0.5 * np.exp(-abs_z) / prep.magnitude
    density_sum = float(density.sum())
    # Softmax of -|z| with the max subtracted: survives scales tiny enough to
    # underflow every density.
    shifted = np.exp(abs_z.min() - abs_z)
    softmax_weights = shifted / shifted.sum()
    return SoftSelection(
        probs=probs,
        threshold=float(threshold),
        k=kk,
        alpha=prep.alpha,
        scores=arr,
        density=density,
        density_sum=density_sum,
        softmax_weights=softmax_weights,
        prepared=prep,
    )


def soft_rank(scores, alpha: float) -> SoftRanks:
    """Differentiable ranks: element i gets cdf_sum(r_i) - 1/2.

    Ascending ranks for alpha > 0 (smallest score ranks near 0), descending
    for alpha < 0. The own-element term contributes exactly 1/2 at any scale,
    which the constant shift removes, so ranks converge to 0..n-1 as the scale
    shrinks and always total n(n-1)/2.
    """
    prep = prepare(scores, alpha)
    ranks_sorted = prep.coeffs.segment_values - 0.5
    ranks = ranks_sorted[prep.sorted_scores.inv_perm]
    return SoftRanks(ranks=ranks, alpha=prep.alpha, prepared=prep)


def soft_sort(scores, alpha: float) -> SoftSorted:
    """Differentiable sort: the inverse CDF sum at levels 1/2, 3/2, ...

    Uses the sorted-batch inverse (O(n) after preparation). The result is a
    smooth function of the scores that tends to the hard ascending sort as
    alpha -> 0+ (descending for alpha -> 0-).
    """
    prep = prepare(scores, alpha)
    levels = np.arange(prep.n, dtype=np.float64) + 0.5
    values = cdf_sum_inverse_sorted(prep, levels)
    return SoftSorted(values=values, alpha=prep.alpha, prepared=prep)


def soft_permutation(scores, alpha: float) -> DoublyStochastic:
    """Differentiable permutation matrix (positive alpha only).

    The real line is cut into n bands at the levels where the CDF sum equals
    1, ..., n-1; entry (i, j) is the Laplace mass element i places in band j:

        entry(i, j) = Lap((t_{j+1} - r_i)/alpha) - Lap((t_j - r_i)/alpha)

    with t_0 = -inf and t_n = +inf. Each row sums to one by telescoping; each
    column sums to one because the CDF sum rises by exactly one across a band.
    As alpha -> 0+ the matrix tends to the hard permutation with
    entry (i, rank(r_i)) = 1. O(n^2) time and memory.
    """
    a = float(alpha)
    if a == 0.0:
        raise ZeroScale("scale must be nonzero")
    if a < 0.0:
        raise SoftOrderError(f"soft_permutation requires a positive scale, got {a!r}")
    prep = prepare(scores, a)
    n = prep.n
    if n == 1:
        return DoublyStochastic(
            entries=np.ones((1, 1)),
            alpha=a,
            inner_thresholds=np.empty(0),
            prepared=prep,
        )
    inner = cdf_sum_inverse_sorted(prep, np.arange(1, n, dtype=np.float64))
    arr = prep.original_scores()
    lo = (np.concatenate(([-np.inf], inner))[None, :] - arr[:, None]) / a
    hi = (np.concatenate((inner, [np.inf]))[None, :] - arr[:, None]) / a
    entries = _cdf_band(lo, hi)
    return DoublyStochastic(
        entries=entries, alpha=a, inner_thresholds=inner, prepared=prep
    )


def _cdf_band(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Lap(hi) - Lap(lo) without cancellation, for lo <= hi elementwise.

    Three branches keep every exponent nonpositive and use expm1 where the two
    CDF values would otherwise cancel; straddling bands evaluate both tails
    directly. Tiny negative rounding residue is clamped to zero.
    """
    out = np.empty_like(lo)
    d = lo - hi  # <= 0; -inf is fine
    both_neg = hi <= 0.0
    both_pos = lo > 0.0
    mid = ~(both_neg | both_pos)
    out[both_neg] = 0.5 * np.exp(hi[both_neg]) * (-np.expm1(d[both_neg]))
    out[both_pos] = 0.5 * np.exp(-lo[both_pos]) * (-np.expm1(d[both_pos]))
    out[mid] = 1.0 - 0.5 * np.exp(lo[mid]) - 0.5 * np.exp(-hi[mid])
    return np.maximum(out, 0.0, out=out)


def batch_map(op, score_rows, *args, max_workers: int | None = None, **kwargs):
    """Apply a row-wise op to each row of a matrix, rows in parallel threads.

    The ops are pure functions of their arguments and the scan kernels release
    the GIL, so rows share no mutable state. Returns a list of per-row results
    in row order.
    """
    rows = np.asarray(score_rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionMismatch(f"expected a matrix of rows, got shape {rows.shape}")
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda row: op(row, *args, **kwargs), rows))
