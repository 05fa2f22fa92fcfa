"""The four op wrappers: adapt the buffer, run the core, return the output
array plus a gradient handle that owns its backward state.

Each wrapper adds nothing to the forward path beyond the (usually zero-copy)
buffer adaptation: the array handed back is the core's own output, bit for
bit. Errors surface as the host's native exception types; everything the core
raises derives from ``ValueError`` (``softorder.SoftOrderError``), and buffer
adaptation raises ``TypeError`` for objects that are not numeric memory.

The jitted scans inside the core release the interpreter lock, so wrapper
calls can overlap on a thread pool; a single gradient handle, though, belongs
to one thread.
"""

import softorder as so

from .buffers import as_bound_array
from .handles import (
    PermGradientHandle,
    RankGradientHandle,
    SortGradientHandle,
    TopkGradientHandle,
)

__all__ = ["py_soft_topk", "py_soft_rank", "py_soft_sort", "py_soft_perm"]


def py_soft_topk(scores, k, alpha):
    """Soft top-k through the buffer layer.

    Returns ``(probs, handle)``: the core's probability vector (sums to k)
    and a ``TopkGradientHandle`` with vjp/jvp and the k / alpha
    sensitivities.
    """
    bound = as_bound_array(scores)
    selection = so.soft_topk(bound.data, float(k), float(alpha))
    return selection.probs, TopkGradientHandle(selection)


def py_soft_rank(scores, alpha):
    """Soft ranks; returns ``(ranks, handle)``."""
    bound = as_bound_array(scores)
    ranks = so.soft_rank(bound.data, float(alpha))
    return ranks.ranks, RankGradientHandle(ranks)


def py_soft_sort(scores, alpha):
    """Soft sorted values; returns ``(values, handle)``."""
    bound = as_bound_array(scores)
    sorted_state = so.soft_sort(bound.data, float(alpha))
    return sorted_state.values, SortGradientHandle(sorted_state)


def py_soft_perm(scores, alpha):
    """Soft permutation matrix; returns ``(entries, handle)``.

    ``entries`` is the n-by-n doubly stochastic matrix, rows indexing
    elements and columns rank positions; requires ``alpha > 0``.
    """
    bound = as_bound_array(scores)
    perm = so.soft_permutation(bound.data, float(alpha))
    return perm.entries, PermGradientHandle(perm)
