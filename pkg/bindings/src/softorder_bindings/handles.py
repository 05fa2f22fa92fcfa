"""Gradient handles that own their backward state.

A handle deep-copies every array the backward formulas read, so the caller
may mutate or free the original scores (or let the host garbage collector
reclaim the forward result) without invalidating later gradient calls.
Construction is one pass of array copies; every product afterwards is the
core's closed form, no recomputation of the forward pass.

Handles are cheap and stateless after construction but are not meant to be
shared across host threads; make one per stream.
"""

import numpy as np

import softorder as so

__all__ = [
    "TopkGradientHandle",
    "RankGradientHandle",
    "SortGradientHandle",
    "PermGradientHandle",
]


def _copy_prepared(prep: so.Prepared) -> so.Prepared:
    sorted_scores = so.SortedScores(
        values_sorted=prep.sorted_scores.values_sorted.copy(),
        perm=prep.sorted_scores.perm.copy(),
        inv_perm=prep.sorted_scores.inv_perm.copy(),
        n=prep.sorted_scores.n,
    )
    coeffs = so.SegmentCoefficients(
        prefix=prep.coeffs.prefix.copy(),
        suffix=prep.coeffs.suffix.copy(),
        scale=prep.coeffs.scale,
        segment_values=prep.coeffs.segment_values.copy(),
    )
    return so.Prepared(
        sorted_scores=sorted_scores,
        coeffs=coeffs,
        alpha=prep.alpha,
        sign=prep.sign,
    )


def _as_vector(v, n: int) -> np.ndarray:
    out = np.asarray(v, dtype=np.float64)
    if out.shape != (n,):
        raise so.DimensionMismatch(f"expected a cotangent of shape ({n},), got {out.shape}")
    return out


class TopkGradientHandle:
    """Backward state for one soft top-k call.

    ``vjp`` / ``jvp`` are O(n) Jacobian products with respect to the scores;
    ``grad_k`` / ``grad_alpha`` are the budget and scale sensitivities of the
    probabilities; ``threshold_grad_k`` / ``threshold_grad_alpha`` the same
    for the cutoff value.
    """

    def __init__(self, selection: so.SoftSelection):
        self._state = so.SoftSelection(
            probs=selection.probs.copy(),
            threshold=float(selection.threshold),
            k=float(selection.k),
            alpha=float(selection.alpha),
            scores=selection.scores.copy(),
            density=selection.density.copy(),
            density_sum=float(selection.density_sum),
            softmax_weights=selection.softmax_weights.copy(),
            prepared=_copy_prepared(selection.prepared),
        )

    @property
    def n(self) -> int:
        return self._state.probs.shape[0]

    def vjp(self, cotangent) -> np.ndarray:
        return so.topk_vjp(self._state, _as_vector(cotangent, self.n))

    def jvp(self, tangent) -> np.ndarray:
        return so.topk_jvp(self._state, _as_vector(tangent, self.n))

    def grad_k(self) -> np.ndarray:
        return so.probs_grad_k(self._state)

    def grad_alpha(self) -> np.ndarray:
        return so.probs_grad_alpha(self._state)

    def threshold_grad_k(self) -> float:
        return so.threshold_grad_k(self._state)

    def threshold_grad_alpha(self) -> float:
        return so.threshold_grad_alpha(self._state)


class RankGradientHandle:
    """Backward state for one soft rank call.

    The rank Jacobian with respect to the scores is symmetric, so a single
    product form serves as both ``jvp`` and ``vjp``.
    """

    def __init__(self, ranks: so.SoftRanks):
        self._state = so.SoftRanks(
            ranks=ranks.ranks.copy(),
            alpha=float(ranks.alpha),
            prepared=_copy_prepared(ranks.prepared),
        )

    @property
    def n(self) -> int:
        return self._state.ranks.shape[0]

    def vjp(self, cotangent) -> np.ndarray:
        return so.rank_grad_product(self._state, _as_vector(cotangent, self.n))

    jvp = vjp


class SortGradientHandle:
    """Backward state for one soft sort call.

    ``vjp`` pulls a cotangent on the sorted values back onto the scores;
    ``jvp`` pushes a score tangent forward; ``grad_alpha`` is the scale
    sensitivity of every sorted value. The batched level machinery behind
    ``jvp`` and ``grad_alpha`` is built on first use and then cached.
    """

    def __init__(self, sorted_state: so.SoftSorted):
        self._state = so.SoftSorted(
            values=sorted_state.values.copy(),
            alpha=float(sorted_state.alpha),
            prepared=_copy_prepared(sorted_state.prepared),
        )
        self._multi = None

    @property
    def n(self) -> int:
        return self._state.values.shape[0]

    def _levels(self) -> so.MultiThresholds:
        if self._multi is None:
            levels = np.arange(self.n, dtype=np.float64) + 0.5
            self._multi = so.multi_threshold_grads(self._state.prepared, levels)
        return self._multi

    def vjp(self, cotangent) -> np.ndarray:
        return so.sort_vjp(self._state, _as_vector(cotangent, self.n))

    def jvp(self, tangent) -> np.ndarray:
        return self._levels().qvp(_as_vector(tangent, self.n))

    def grad_alpha(self) -> np.ndarray:
        return self._levels().grad_alpha()


class PermGradientHandle:
    """Backward state for one soft permutation call.

    ``vjp`` pulls an n-by-n matrix cotangent back onto the scores, O(n^2).
    """

    def __init__(self, perm: so.DoublyStochastic):
        self._state = so.DoublyStochastic(
            entries=perm.entries.copy(),
            alpha=float(perm.alpha),
            inner_thresholds=perm.inner_thresholds.copy(),
            prepared=_copy_prepared(perm.prepared),
        )

    @property
    def n(self) -> int:
        return self._state.entries.shape[0]

    def vjp(self, cotangent) -> np.ndarray:
        V = np.asarray(cotangent, dtype=np.float64)
        if V.shape != (self.n, self.n):
            raise so.DimensionMismatch(
                f"expected a cotangent of shape ({self.n}, {self.n}), got {V.shape}"
            )
        return so.perm_vjp(self._state, V)
