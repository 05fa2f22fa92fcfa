"""Slow reference implementations used to cross-check the fast paths.

Everything here is deliberately naive: direct summation with ``math.fsum``,
bracketed bisection, central finite differences, and argsort-based hard order
operations. No numpy in the numerical cores, no shared code with the
production routines beyond the module boundary, so a bug in the fast path
cannot hide in its own oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

__all__ = [
    "fsum_direct",
    "inverse_bisect",
    "finite_diff",
    "hard_ops",
    "HardOrder",
    "BisectionError",
]


class BisectionError(RuntimeError):
    """Bisection failed to converge within the iteration cap."""


def _laplace_cdf(x: float) -> float:
    # Scalar Laplace CDF, written independently of the package's vector version.
    if x <= 0.0:
        return 0.5 * math.exp(x)
    return 1.0 - 0.5 * math.exp(-x)


def fsum_direct(scores: Sequence[float], x: float, alpha: float) -> float:
    """Sum of shifted Laplace CDFs at ``x``, one term per score, exact summation.

    Args:
        scores: score sequence (any order).
        x: evaluation point.
        alpha: nonzero scale; negative values flip the direction.

    Returns:
        sum_i Lap((x - scores[i]) / alpha), accumulated with math.fsum.
    """
    if alpha == 0.0:
        raise ValueError("alpha must be nonzero")
    return math.fsum(_laplace_cdf((x - r) / alpha) for r in scores)


def inverse_bisect(
    scores: Sequence[float],
    k: float,
    alpha: float,
    tol: float = 1e-13,
    max_iter: int = 200,
) -> float:
    """Invert the CDF sum by bisection: find x with fsum_direct(scores, x) = k.

    The bracket starts one scale-width beyond the score range and grows
    geometrically until it straddles the root. Convergence is declared on the
    k-residual (abs tol), never silently: exceeding ``max_iter`` raises.
    """
    n = len(scores)
    if not 0.0 < k < n:
        raise ValueError(f"k must lie in (0, {n}), got {k}")
    a = abs(alpha)
    lo = min(scores) - a
    hi = max(scores) + a
    # The sum is increasing in x for alpha > 0, decreasing for alpha < 0.
    sign = 1.0 if alpha > 0 else -1.0

    def residual(x: float) -> float:
        return sign * (fsum_direct(scores, x, alpha) - k)

    width = hi - lo if hi > lo else a
    while residual(lo) > 0.0:
        lo -= width
        width *= 2.0
    width = hi - lo
    while residual(hi) < 0.0:
        hi += width
        width *= 2.0

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        res = residual(mid)
        if abs(res) <= tol:
            return mid
        if res < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= abs(mid) * 4e-16 + 5e-324:
            return 0.5 * (lo + hi)
    raise BisectionError(
        f"no convergence to |residual| <= {tol} within {max_iter} iterations"
    )


def finite_diff(f: Callable[[float], float], x0: float, h: float = 1e-6) -> float:
    """Central finite difference (f(x0+h) - f(x0-h)) / 2h for scalar f."""
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


@dataclass(frozen=True)
class HardOrder:
    """Exact (zero-temperature) order operations for a score sequence.

    Attributes:
        topk_mask: 0/1 floats marking the k largest scores.
        ranks: ascending ranks, 0-based (smallest score gets rank 0).
        sorted_values: scores in ascending order.
        perm_matrix: 0/1 matrix with entry (i, j) = 1 iff element i has rank j.
    """

    topk_mask: tuple[float, ...]
    ranks: tuple[int, ...]
    sorted_values: tuple[float, ...]
    perm_matrix: tuple[tuple[float, ...], ...]


def hard_ops(scores: Sequence[float], k: int) -> HardOrder:
    """Argsort-based hard order operations.

    Args:
        scores: pairwise distinct values (ties make ranks/permutation
            ill-defined and raise).
        k: integer selection size in [0, n] for the max-direction mask.
    """
    n = len(scores)
    if len(set(scores)) != n:
        raise ValueError("hard order operations require distinct scores")
    if not (isinstance(k, int) and 0 <= k <= n):
        raise ValueError(f"k must be an integer in [0, {n}], got {k!r}")
    order = sorted(range(n), key=lambda i: scores[i])  # ascending
    ranks = [0] * n
    for pos, idx in enumerate(order):
        ranks[idx] = pos
    mask = [1.0 if ranks[i] >= n - k else 0.0 for i in range(n)]
    matrix = [[0.0] * n for _ in range(n)]
    for i in range(n):
        matrix[i][ranks[i]] = 1.0
    return HardOrder(
        topk_mask=tuple(mask),
        ranks=tuple(ranks),
        sorted_values=tuple(sorted(scores)),
        perm_matrix=tuple(tuple(row) for row in matrix),
    )
