"""Buffer adaptation between caller-owned memory and the core ops.

The forward path accepts any object exposing double precision memory through
the buffer protocol (an ndarray, ``array.array('d')``, a ``memoryview`` with
format ``'d'``) and wraps it without copying whenever the layout already
matches what the core reads: C-contiguous float64. Anything else, including
lists and arrays of another dtype, gets exactly one converting copy, and the
returned view says so.

The view never outlives the caller's buffer because the ``BoundArray`` keeps
a reference to the owning object; dropping the caller's own name for it is
safe while the view is alive.
"""

from dataclasses import dataclass

import numpy as np

from softorder import DimensionMismatch

__all__ = ["BoundArray", "as_bound_array"]


@dataclass(frozen=True)
class BoundArray:
    """A float64 view over caller memory.

    Attributes:
        data: C-contiguous float64 array the core ops read.
        owner: the object keeping the memory alive; ``data`` aliases its
            buffer exactly when ``copied`` is False.
        copied: True when adaptation had to make a converting copy.
    """

    data: np.ndarray
    owner: object
    copied: bool

    @property
    def n(self) -> int:
        return self.data.shape[0]


def _aliases(arr: np.ndarray, obj: object) -> bool:
    if arr is obj:
        return True
    try:
        return bool(np.shares_memory(arr, obj))
    except TypeError:
        return False


def as_bound_array(obj, ndim: int = 1) -> BoundArray:
    """Wrap ``obj`` as a ``BoundArray`` with ``ndim`` dimensions.

    Zero-copy when ``obj`` already exposes a C-contiguous float64 buffer;
    one converting copy otherwise. Raises ``TypeError`` for objects numpy
    cannot interpret as numeric memory and ``DimensionMismatch`` (a
    ``ValueError``) for the wrong number of dimensions.
    """
    try:
        arr = np.asarray(obj)
    except (TypeError, ValueError) as exc:
        raise TypeError(
            f"cannot adapt {type(obj).__name__} to a double precision buffer"
        ) from exc
    real_number = np.issubdtype(arr.dtype, np.number) and not np.issubdtype(
        arr.dtype, np.complexfloating
    )
    if not real_number:
        raise TypeError(
            f"cannot adapt dtype {arr.dtype} to a double precision buffer"
        )
    if arr.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-D buffer, got {arr.ndim}-D")
    if arr.dtype == np.float64 and arr.flags.c_contiguous:
        return BoundArray(data=arr, owner=obj, copied=not _aliases(arr, obj))
    converted = np.ascontiguousarray(arr, dtype=np.float64)
    return BoundArray(data=converted, owner=converted, copied=True)
