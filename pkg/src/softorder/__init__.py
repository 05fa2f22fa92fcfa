"""Differentiable order statistics via a soft selection threshold.

Soft top-k, soft rank, soft sort and soft permutation, all derived from one
strictly monotone sum of shifted Laplace CDFs with an exact closed-form
inverse. Forward passes cost O(n log n) (O(n^2) for the permutation matrix),
every derivative is analytic, and a benchmark CLI lives in
``softorder.bench`` (``python3 -m softorder.bench --help``).
"""

from .core import (
    DimensionMismatch,
    KOutOfRange,
    NonFiniteInput,
    Prepared,
    ScaleParam,
    SegmentCoefficients,
    SoftOrderError,
    SortedScores,
    UnsortedTargets,
    ZeroScale,
    cdf_sum,
    cdf_sum_inverse,
    cdf_sum_inverse_sorted,
    laplace_cdf,
    prepare,
)
from .grad import (
    MultiThresholds,
    log_probs,
    log_probs_grad_alpha,
    log_probs_grad_k,
    log_probs_jvp,
    log_probs_vjp,
    multi_threshold_grads,
    perm_vjp,
    probs_grad_alpha,
    probs_grad_k,
    rank_grad_product,
    sort_vjp,
    threshold_grad_alpha,
    threshold_grad_k,
    topk_jvp,
    topk_vjp,
)
from .ops import (
    DoublyStochastic,
    SoftRanks,
    SoftSelection,
    SoftSorted,
    batch_map,
    soft_permutation,
    soft_rank,
    soft_sort,
    soft_topk,
)

__version__ = "0.1.0"

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
    "SoftSelection",
    "SoftRanks",
    "SoftSorted",
    "DoublyStochastic",
    "soft_topk",
    "soft_rank",
    "soft_sort",
    "soft_permutation",
    "batch_map",
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
    "__version__",
]
