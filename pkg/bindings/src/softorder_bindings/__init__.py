"""Array-buffer bindings for the softorder operations.

Four wrappers (``py_soft_topk``, ``py_soft_rank``, ``py_soft_sort``,
``py_soft_perm``) that adapt caller memory zero-copy when the layout permits,
return the core outputs bit for bit, and pair each result with a gradient
handle owning its backward state. ``softorder_bindings.torch_recipe`` shows
how to register the ops with torch autograd.
"""

from .buffers import BoundArray, as_bound_array
from .handles import (
    PermGradientHandle,
    RankGradientHandle,
    SortGradientHandle,
    TopkGradientHandle,
)
from .ops import py_soft_perm, py_soft_rank, py_soft_sort, py_soft_topk

__version__ = "0.1.0"

__all__ = [
    "BoundArray",
    "as_bound_array",
    "TopkGradientHandle",
    "RankGradientHandle",
    "SortGradientHandle",
    "PermGradientHandle",
    "py_soft_topk",
    "py_soft_rank",
    "py_soft_sort",
    "py_soft_perm",
    "__version__",
]
