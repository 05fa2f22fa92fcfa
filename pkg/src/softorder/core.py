"""Core numerics for differentiable order statistics.

The central object is the strictly monotone map

    F(x) = sum_i Lap((x - r_i) / alpha),    Lap(t) = CDF of the standard
                                            Laplace distribution,

built from a score sequence r and a nonzero scale alpha. For alpha > 0 the map
is strictly increasing with image (0, n); its value at x measures how many
scores sit softly below x, and its inverse at level k yields the soft
selection threshold. Negative alpha flips the direction and is reduced to the
positive case via F_alpha(r, x) = F_|alpha|(-r, -x); thresholds map back as
b = -F_|alpha|^{-1}(-r, k).

After sorting the scores once, two anchored exponential partial-sum arrays
(``prefix`` and ``suffix``) make both evaluation and exact closed-form
inversion O(log n) per query on top of the O(n log n) sort. Every exponent
formed anywhere in this module is nonpositive by construction, so nothing
overflows however extreme the inputs; tails are inverted in log form and the
interior uses the cancellation-free root of the segment quadratic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _scan

__all__ = [
    "SoftOrderError",
    "NonFiniteInput",
    "ZeroScale",
    "KOutOfRange",
    "DimensionMismatch",
    "UnsortedTargets",
    "ScaleParam",
    "SortedScores",
    "SegmentCoefficients",
    "Prepared",
    "laplace_cdf",
    "prepare",
    "cdf_sum",
    "cdf_sum_inverse",
    "cdf_sum_inverse_sorted",
]


class SoftOrderError(ValueError):
    """Base class for domain errors raised by this package."""


class NonFiniteInput(SoftOrderError):
    """An input contained NaN or infinity where a finite value is required."""


class ZeroScale(SoftOrderError):
    """The scale parameter was zero (or otherwise outside its domain)."""


class KOutOfRange(SoftOrderError):
    """A selection level fell outside the open interval (0, n)."""


class DimensionMismatch(SoftOrderError):
    """An array argument had the wrong shape or length."""


class UnsortedTargets(SoftOrderError):
    """A batch of targets that must be ascending was not sorted."""


def laplace_cdf(x):
    """Standard Laplace CDF, elementwise; scalars in, scalar out.

    Piecewise form 0.5*exp(x) for x <= 0 and 1 - 0.5*exp(-x) otherwise; the
    exponent is clamped to the nonpositive half-line before exponentiation so
    the unselected branch of the ``where`` cannot overflow.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.where(
        arr <= 0.0,
        0.5 * np.exp(np.minimum(arr, 0.0)),
        1.0 - 0.5 * np.exp(-np.maximum(arr, 0.0)),
    )
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class ScaleParam:
    """Nonzero real scale; the sign selects the direction of the order.

    alpha > 0 orders ascending (mass accumulates from the smallest score up),
    alpha < 0 descending. ``magnitude`` and ``sign`` expose the split.
    """

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if math.isnan(a) or math.isinf(a):
            raise NonFiniteInput(f"scale must be finite, got {self.alpha!r}")
        if a == 0.0:
            raise ZeroScale("scale must be nonzero")
        object.__setattr__(self, "alpha", a)

    @property
    def magnitude(self) -> float:
        return abs(self.alpha)

    @property
    def sign(self) -> float:
        return 1.0 if self.alpha > 0.0 else -1.0


@dataclass(frozen=True)
class SortedScores:
    """A score sequence together with its sorting permutation.

    Attributes:
        values_sorted: the values in ascending order.
        perm: sorted position -> original index (argsort, stable at ties).
        inv_perm: original index -> sorted position.
        n: sequence length.
    """

    values_sorted: np.ndarray
    perm: np.ndarray
    inv_perm: np.ndarray
    n: int


@dataclass(frozen=True)
class SegmentCoefficients:
    """Anchored exponential partial sums for one sorted score sequence.

    Attributes:
        prefix: prefix[j] = sum_{i <= j} exp((r_i - r_j) / scale), in [1, n].
        suffix: suffix[j] = sum_{i >= j} exp((r_j - r_i) / scale), in [1, n].
        scale: the positive scale they were built with.
        segment_values: CDF sum evaluated at each sorted score; nondecreasing,
            inside (0, n). Segment lookup for inversion searches this array.
    """

    prefix: np.ndarray
    suffix: np.ndarray
    scale: float
    segment_values: np.ndarray


@dataclass(frozen=True)
class Prepared:
    """Sorted scores plus coefficients, ready for evaluation and inversion.

    For alpha < 0 the strictly decreasing CDF sum is handled by preparing the
    negated scores with |alpha|; ``sign`` records the direction so queries and
    thresholds can be mapped in and out. ``sorted_scores`` therefore describes
    the internal (possibly negated) sequence.
    """

    sorted_scores: SortedScores
    coeffs: SegmentCoefficients
    alpha: float
    sign: float

    @property
    def n(self) -> int:
        return self.sorted_scores.n

    @property
    def magnitude(self) -> float:
        return self.coeffs.scale

    def original_scores(self) -> np.ndarray:
        """The caller's score sequence, original order and sign."""
        values = self.sorted_scores.values_sorted[self.sorted_scores.inv_perm]
        return values if self.sign > 0 else -values


def _validated_scores(scores) -> np.ndarray:
    arr = np.ascontiguousarray(scores, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"scores must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionMismatch("scores must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("scores must be finite")
    return arr


def prepare(scores, alpha: float) -> Prepared:
    """Sort the scores and build the coefficient arrays, O(n log n).

    Args:
        scores: finite 1-D sequence, any order, ties allowed.
        alpha: nonzero finite scale; negative flips the order direction.

    Raises:
        NonFiniteInput, ZeroScale, DimensionMismatch.
    """
    scale = ScaleParam(float(alpha))
    arr = _validated_scores(scores)
    internal = arr if scale.sign > 0 else -arr
    perm = np.argsort(internal, kind="stable")
    values = np.ascontiguousarray(internal[perm])
    inv_perm = np.empty_like(perm)
    inv_perm[perm] = np.arange(arr.size)
    prefix, suffix, segment_values = _scan.anchored_coefficients(
        values, scale.magnitude
    )
    return Prepared(
        sorted_scores=SortedScores(
            values_sorted=values, perm=perm, inv_perm=inv_perm, n=int(arr.size)
        ),
        coeffs=SegmentCoefficients(
            prefix=prefix,
            suffix=suffix,
            scale=scale.magnitude,
            segment_values=segment_values,
        ),
        alpha=scale.alpha,
        sign=scale.sign,
    )


def cdf_sum(prep: Prepared, xs):
    """Evaluate the CDF sum at one or many query points, input order kept.

    Queries need not be sorted: each one binary-searches its segment among the
    sorted scores, O(m log n) for m queries. Within segment j the value is

        (j + 1) - prefix[j]/2 * exp((r_j - x)/a) + suffix[j+1]/2 * exp((x - r_{j+1})/a)

    with the missing term dropped in the two tail segments. Both exponents are
    nonpositive because r_j <= x < r_{j+1} inside the segment.
    """
    arr = np.asarray(xs, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("query points must be finite")
    x = arr if prep.sign > 0 else -arr
    r = prep.sorted_scores.values_sorted
    n = prep.n
    a = prep.coeffs.scale
    j = np.searchsorted(r, x, side="right") - 1
    jc = np.clip(j, 0, n - 1)
    j1 = np.clip(j + 1, 0, n - 1)
    # Clamp exponents before exp: lanes masked out by the where() still get
    # evaluated and would otherwise overflow in the tails.
    lower = 0.5 * prep.coeffs.prefix[jc] * np.exp(np.minimum((r[jc] - x) / a, 0.0))
    upper = 0.5 * prep.coeffs.suffix[j1] * np.exp(np.minimum((x - r[j1]) / a, 0.0))
    out = (
        (j + 1.0)
        - np.where(j >= 0, lower, 0.0)
        + np.where(j <= n - 2, upper, 0.0)
    )
    if np.ndim(xs) == 0:
        return float(out)
    return out


def _invert_segment(r, prefix, suffix, a, n, j, k):
    """Closed-form inverse inside segment j (internal, ascending problem).

    Tails are solved in log form. The interior reduces to the quadratic
    suffix[j+1]*u^2 + 2*(c - k)*u - prefix[j]*e = 0 in u = exp((x - r_{j+1})/a)
    with c = j + 1 and e = exp((r_j - r_{j+1})/a); of its two equivalent root
    expressions the one without subtractive cancellation is chosen by the sign
    of k - c, and a log-space fallback covers the corner where u underflows
    (far-separated clusters with k at the plateau level).
    """
    if j < 0:
        return r[0] + a * (math.log(2.0 * k) - math.log(suffix[0]))
    if j >= n - 1:
        return r[n - 1] - a * (math.log(2.0 * (n - k)) - math.log(prefix[n - 1]))
    c = j + 1.0
    gap = (r[j] - r[j + 1]) / a
    e = math.exp(gap)
    disc = math.sqrt((k - c) ** 2 + prefix[j] * suffix[j + 1] * e)
    if k >= c:
        u = ((k - c) + disc) / suffix[j + 1]
        if u > 0.0:
            return r[j + 1] + a * math.log(u)
        # k == c with the whole discriminant underflown: symmetric midpoint.
        log_u = 0.5 * (math.log(prefix[j]) + gap - math.log(suffix[j + 1]))
        return r[j + 1] + a * log_u
    u = prefix[j] * e / (disc + (c - k))
    if u > 0.0:
        return r[j + 1] + a * math.log(u)
    log_u = math.log(prefix[j]) + gap - math.log(disc + (c - k))
    return r[j + 1] + a * log_u


def cdf_sum_inverse(prep: Prepared, k: float) -> float:
    """Exact closed-form inverse: the x with cdf_sum(prep, x) = k.

    Args:
        prep: prepared scores.
        k: level in the open interval (0, n).

    The segment is found by binary search over ``segment_values`` (rightmost
    match at ties), then inverted in closed form; O(log n) after preparation.
    """
    kk = float(k)
    if math.isnan(kk) or math.isinf(kk):
        raise NonFiniteInput(f"k must be finite, got {k!r}")
    n = prep.n
    if not 0.0 < kk < n:
        raise KOutOfRange(f"k must lie in the open interval (0, {n}), got {k!r}")
    seg = prep.coeffs.segment_values
    j = int(np.searchsorted(seg, kk, side="right")) - 1
    b = _invert_segment(
        prep.sorted_scores.values_sorted,
        prep.coeffs.prefix,
        prep.coeffs.suffix,
        prep.coeffs.scale,
        n,
        j,
        kk,
    )
    return prep.sign * b


def cdf_sum_inverse_sorted(prep: Prepared, ks) -> np.ndarray:
    """Invert a whole ascending batch of levels in O(n + L) after the sort.

    Args:
        prep: prepared scores.
        ks: ascending levels, each in (0, n). Raises UnsortedTargets if the
            batch decreases anywhere, KOutOfRange if a level leaves (0, n).

    Returns:
        Thresholds in the caller's direction: ascending for alpha > 0,
        descending for alpha < 0 (the internal inverse is negated back).
    """
    arr = np.ascontiguousarray(ks, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"levels must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        return np.empty(0, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("levels must be finite")
    if np.any(np.diff(arr) < 0.0):
        raise UnsortedTargets("levels must be ascending")
    n = prep.n
    if arr[0] <= 0.0 or arr[-1] >= n:
        raise KOutOfRange(f"levels must lie in the open interval (0, {n})")

    r = prep.sorted_scores.values_sorted
    prefix = prep.coeffs.prefix
    suffix = prep.coeffs.suffix
    a = prep.coeffs.scale
    j = _scan.locate_segments(prep.coeffs.segment_values, arr)
    jc = np.clip(j, 0, n - 1)
    j1 = np.clip(j + 1, 0, n - 1)
    c = j + 1.0
    diff = arr - c
    gap = np.minimum((r[jc] - r[j1]) / a, 0.0)
    e = np.exp(gap)
    disc = np.sqrt(diff * diff + prefix[jc] * suffix[j1] * e)
    upper_u = (diff + disc) / suffix[j1]
    lower_u = prefix[jc] * e / np.where(diff < 0.0, disc - diff, 1.0)
    u = np.where(diff >= 0.0, upper_u, lower_u)
    with np.errstate(divide="ignore"):
        interior = r[j1] + a * np.log(u)
    low = r[0] + a * (np.log(2.0 * arr) - math.log(suffix[0]))
    high = r[n - 1] - a * (np.log(2.0 * (n - arr)) - math.log(prefix[n - 1]))
    out = np.where(j < 0, low, np.where(j >= n - 1, high, interior))

    # Rare underflow corner (see _invert_segment): redo those lanes in log form.
    bad = ~np.isfinite(out)
    if np.any(bad):
        for idx in np.flatnonzero(bad):
            out[idx] = _invert_segment(
                r, prefix, suffix, a, n, int(j[idx]), float(arr[idx])
            )
    return prep.sign * out
