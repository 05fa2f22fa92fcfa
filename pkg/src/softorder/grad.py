"""Exact analytic derivatives of every op, reusing forward state.

No autodiff anywhere: each formula below was derived by implicit
differentiation of the defining equation cdf_sum(threshold) = k and is checked
against central finite differences in the test suite. All products are formed
from the density weights kept on the forward outputs, so a backward pass costs
O(n) (top-k, rank), O(n + L) (batched thresholds, sort) or O(n^2)
(permutation, matching its forward).

Sign conventions: ``density`` is the nonnegative weight min(p, 1-p)/|alpha|;
direction flips enter only through sign(alpha) factors, which makes every
formula valid for both signs of the scale. The matrix of threshold
sensitivities d threshold_m / d score_i is exactly the softmax-weight row
q_m for either sign, which the JVP/VJP pairs below exploit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _scan
from .core import (
    DimensionMismatch,
    Prepared,
    cdf_sum_inverse_sorted,
)
from .ops import DoublyStochastic, SoftRanks, SoftSelection, SoftSorted

__all__ = [
    "threshold_grad_k",
    "threshold_grad_alpha",
    "probs_grad_k",
    "probs_grad_alpha",
    "topk_jvp",
    "topk_vjp",
    "log_probs",
    "log_probs_grad_k",
    "log_probs_grad_alpha",
    "log_probs_jvp",
    "log_probs_vjp",
    "MultiThresholds",
    "multi_threshold_grads",
    "rank_grad_product",
    "sort_vjp",
    "perm_vjp",
]


def _check_vector(v, n: int) -> np.ndarray:
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.shape != (n,):
        raise DimensionMismatch(f"expected a vector of length {n}, got {arr.shape}")
    return arr


def _sign(alpha: float) -> float:
    return 1.0 if alpha > 0.0 else -1.0


def threshold_grad_k(sel: SoftSelection) -> float:
    """d threshold / d k = sign(alpha) / sum(density)."""
    return _sign(sel.alpha) / sel.density_sum


def threshold_grad_alpha(sel: SoftSelection) -> float:
    """d threshold / d alpha = (threshold - <q, scores>) / alpha."""
    center = float(sel.softmax_weights @ sel.scores)
    return (sel.threshold - center) / sel.alpha


def probs_grad_k(sel: SoftSelection) -> np.ndarray:
    """d probs / d k: exactly the softmax weights (nonnegative, sums to 1)."""
    return sel.softmax_weights.copy()


def probs_grad_alpha(sel: SoftSelection) -> np.ndarray:
    """d probs / d alpha = density * (scores - <q, scores>) / |alpha|.

    Sums to zero: moving the scale cannot create or destroy selection mass.
    """
    center = float(sel.softmax_weights @ sel.scores)
    return sel.density * (sel.scores - center) / abs(sel.alpha)


def topk_jvp(sel: SoftSelection, v) -> np.ndarray:
    """Directional derivative of probs along score direction v.

    J v = sign(alpha) * (<q, v> * density - density * v); rows of J sum to
    zero over v = const, reflecting mass conservation.
    """
    arr = _check_vector(v, sel.probs.shape[0])
    qv = float(sel.softmax_weights @ arr)
    return _sign(sel.alpha) * (qv * sel.density - sel.density * arr)


def topk_vjp(sel: SoftSelection, v) -> np.ndarray:
    """Cotangent pullback through probs: J^T v.

    J^T v = sign(alpha) * (<density, v> * q - density * v); the transpose of
    :func:`topk_jvp`, which the adjoint identity test pins to 1e-12.
    """
    arr = _check_vector(v, sel.probs.shape[0])
    sv = float(sel.density @ arr)
    return _sign(sel.alpha) * (sv * sel.softmax_weights - sel.density * arr)


def _hinge(sel: SoftSelection) -> np.ndarray:
    # h = min(p, 1-p)/p, formed from the density (cancellation-free) on the
    # p >= 1/2 side and exactly 1 on the other.
    p = sel.probs
    safe = np.maximum(p, 0.5)
    return np.where(p < 0.5, 1.0, abs(sel.alpha) * sel.density / safe)


def log_probs(sel: SoftSelection) -> np.ndarray:
    """log(probs) evaluated stably even where probs underflows to zero.

    With x = (threshold - scores)/alpha: x - log 2 on the small branch,
    log1p(-exp(-x)/2) on the saturated branch; accurate to the last bit at
    both extremes.
    """
    x = (sel.threshold - sel.scores) / sel.alpha
    small = x < 0.0
    out = np.empty_like(x)
    out[small] = x[small] - np.log(2.0)
    out[~small] = np.log1p(-0.5 * np.exp(-x[~small]))
    return out


def log_probs_grad_k(sel: SoftSelection) -> np.ndarray:
    """d log probs / d k = h / (|alpha| * sum(density))."""
    return _hinge(sel) / (abs(sel.alpha) * sel.density_sum)


def log_probs_grad_alpha(sel: SoftSelection) -> np.ndarray:
    """d log probs / d alpha = h * (scores - <q, scores>) / alpha^2."""
    center = float(sel.softmax_weights @ sel.scores)
    return _hinge(sel) * (sel.scores - center) / (sel.alpha * sel.alpha)


def log_probs_jvp(sel: SoftSelection, v) -> np.ndarray:
    """Directional derivative of log probs: (<q, v> h - h * v) / alpha."""
    arr = _check_vector(v, sel.probs.shape[0])
    h = _hinge(sel)
    qv = float(sel.softmax_weights @ arr)
    return (qv * h - h * arr) / sel.alpha


def log_probs_vjp(sel: SoftSelection, v) -> np.ndarray:
    """Cotangent pullback through log probs: (<v, h> q - h * v) / alpha."""
    arr = _check_vector(v, sel.probs.shape[0])
    h = _hinge(sel)
    vh = float(arr @ h)
    return (vh * sel.softmax_weights - h * arr) / sel.alpha


@dataclass(frozen=True)
class MultiThresholds:
    """Thresholds for an ascending batch of levels plus Jacobian products.

    ``thresholds`` are in the caller's direction (descending when alpha < 0);
    ``density_sums`` holds sum_i density_i(threshold_m) per level, always
    positive. The sensitivity matrix Q with rows q_m (softmax weights at
    threshold m) is never materialized: products against it cost O(n + L)
    via the shared anchored kernel sweep.
    """

    thresholds: np.ndarray
    density_sums: np.ndarray
    ks: np.ndarray
    alpha: float
    prepared: Prepared

    @property
    def _mag(self) -> float:
        return abs(self.alpha)

    def _internal_thresholds(self) -> np.ndarray:
        # Ascending regardless of direction; level order matches ks order.
        return self.thresholds if self.alpha > 0 else -self.thresholds

    def grad_k(self) -> np.ndarray:
        """Diagonal of d thresholds / d levels: sign(alpha) / density_sums."""
        return _sign(self.alpha) / self.density_sums

    def qvp(self, v) -> np.ndarray:
        """Q v for a vector over elements (original order), one entry per level."""
        prep = self.prepared
        arr = _check_vector(v, prep.n)
        weighted = _scan.exp_kernel_weighted(
            self._internal_thresholds(),
            prep.sorted_scores.values_sorted,
            np.ascontiguousarray(arr[prep.sorted_scores.perm]),
            self._mag,
        )
        return weighted / (2.0 * self._mag * self.density_sums)

    def vqp(self, v) -> np.ndarray:
        """v^T Q for a vector over levels, one entry per element (original order)."""
        prep = self.prepared
        arr = _check_vector(v, self.thresholds.shape[0])
        weights = np.ascontiguousarray(
            arr / (2.0 * self._mag * self.density_sums)
        )
        per_sorted = _scan.exp_kernel_weighted(
            prep.sorted_scores.values_sorted,
            self._internal_thresholds(),
            weights,
            self._mag,
        )
        return per_sorted[prep.sorted_scores.inv_perm]

    def grad_alpha(self) -> np.ndarray:
        """d thresholds / d alpha = (thresholds - Q scores) / alpha."""
        return (self.thresholds - self.qvp(self.prepared.original_scores())) / self.alpha


def multi_threshold_grads(prep: Prepared, ks) -> MultiThresholds:
    """Thresholds and derivative products for many ascending levels at once.

    Args:
        prep: prepared scores.
        ks: ascending levels in (0, n); UnsortedTargets/KOutOfRange otherwise.

    The density sums come from one anchored two-pointer sweep over the merged
    (scores, thresholds) order, O(n + L); with L = n this keeps whole-pipeline
    cost at the sort's O(n log n).
    """
    arr = np.ascontiguousarray(ks, dtype=np.float64)
    thresholds = cdf_sum_inverse_sorted(prep, arr)
    internal = thresholds if prep.sign > 0 else -thresholds
    kernel_sums = _scan.exp_kernel_weighted(
        internal,
        prep.sorted_scores.values_sorted,
        np.ones(prep.n, dtype=np.float64),
        prep.magnitude,
    )
    density_sums = kernel_sums / (2.0 * prep.magnitude)
    return MultiThresholds(
        thresholds=thresholds,
        density_sums=density_sums,
        ks=arr,
        alpha=prep.alpha,
        prepared=prep,
    )


def rank_grad_product(ranks: SoftRanks, v) -> np.ndarray:
    """Product of the (symmetric) soft-rank Jacobian with a vector.

    d rank_j / d r_i for i != j is -dens(r_j - r_i) and the diagonal collects
    the opposite sign, so J v = (E * v - W) / (2 alpha) with E and W the
    unweighted and v-weighted exponential-kernel row sums. One anchored sweep
    per product, O(n log n) including nothing but the stored preparation.
    Because J is symmetric this is simultaneously the JVP and the VJP.
    """
    prep = ranks.prepared
    arr = _check_vector(v, prep.n)
    r = prep.sorted_scores.values_sorted
    v_sorted = np.ascontiguousarray(arr[prep.sorted_scores.perm])
    ones = np.ones(prep.n, dtype=np.float64)
    kernel_total = _scan.exp_kernel_weighted(r, r, ones, prep.magnitude)
    kernel_weighted = _scan.exp_kernel_weighted(r, r, v_sorted, prep.magnitude)
    out_sorted = (kernel_total * v_sorted - kernel_weighted) / (2.0 * ranks.alpha)
    return out_sorted[prep.sorted_scores.inv_perm]


def sort_vjp(sorted_state: SoftSorted, v) -> np.ndarray:
    """Cotangent pullback through soft_sort.

    The Jacobian of the sorted values with respect to the scores is exactly Q
    (rows = softmax weights at each half-integer level) for either sign of
    alpha, so the pullback is v^T Q from the batched-threshold machinery. The
    forward output already holds the thresholds, so no re-inversion happens.
    """
    prep = sorted_state.prepared
    levels = np.arange(prep.n, dtype=np.float64) + 0.5
    internal = sorted_state.values if prep.sign > 0 else -sorted_state.values
    kernel_sums = _scan.exp_kernel_weighted(
        np.ascontiguousarray(internal),
        prep.sorted_scores.values_sorted,
        np.ones(prep.n, dtype=np.float64),
        prep.magnitude,
    )
    state = MultiThresholds(
        thresholds=sorted_state.values,
        density_sums=kernel_sums / (2.0 * prep.magnitude),
        ks=levels,
        alpha=prep.alpha,
        prepared=prep,
    )
    return state.vqp(v)


def perm_vjp(perm: DoublyStochastic, cotangent) -> np.ndarray:
    """Cotangent pullback through the soft permutation matrix, O(n^2).

    Two contributions per score: the direct dependence of the row of band
    masses on the element's own position, and the indirect dependence of every
    band edge on every score (edge sensitivities are softmax rows). Both
    telescope into column operations on the dense density matrix
    dens[i, m] = Laplace density of (edge_m - r_i)/alpha.
    """
    prep = perm.prepared
    n = prep.n
    V = np.ascontiguousarray(cotangent, dtype=np.float64)
    if V.shape != (n, n):
        raise DimensionMismatch(f"expected a cotangent of shape {(n, n)}, got {V.shape}")
    if n == 1:
        return np.zeros(1)
    a = perm.alpha
    arr = prep.original_scores()
    z = (perm.inner_thresholds[None, :] - arr[:, None]) / a
    dens = 0.5 * np.exp(-np.abs(z)) / a
    dV = np.diff(V, axis=1)  # dV[:, m-1] = V[:, m] - V[:, m-1]
    direct = np.sum(dens * dV, axis=1)
    edge_grad = -np.sum(dens * dV, axis=0)
    col_sums = np.sum(dens, axis=0)
    # A column that fully underflowed contributes nothing either way; dodge 0/0.
    safe = np.where(col_sums > 0.0, col_sums, 1.0)
    indirect = dens @ (edge_grad / safe)
    return direct + indirect
