"""The value type carried over graph connections.

A Tensor is an n-dimensional array of i64 or f64 values with explicit shape;
rank 0 is a scalar. Extents may be zero (variable-length results are common),
and data is stored flat in row-major order.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

DTYPES = {"i64": np.int64, "f64": np.float64}
_NP_TO_DTYPE = {np.dtype(np.int64): "i64", np.dtype(np.float64): "f64"}


class Tensor:
    """Immutable n-d array with dtype restricted to i64/f64."""

    __slots__ = ("_array",)

    def __init__(self, array, dtype: str | None = None):
        arr = np.asarray(array)
        if dtype is not None:
            arr = arr.astype(DTYPES[dtype])
        elif arr.dtype not in _NP_TO_DTYPE:
            # integers stay integral, everything else is promoted to f64
            arr = arr.astype(np.int64 if arr.dtype.kind in "iub" else np.float64)
        # note: ascontiguousarray would promote rank 0 to rank 1
        arr = np.asarray(arr, order="C")
        if not arr.flags.c_contiguous or arr.flags.writeable:
            arr = arr.copy(order="C")
        arr.flags.writeable = False
        self._array = arr

    @property
    def dtype(self) -> str:
        return _NP_TO_DTYPE[self._array.dtype]

    @property
    def shape(self) -> tuple[int, ...]:
        return self._array.shape

    @property
    def rank(self) -> int:
        return self._array.ndim

    @property
    def array(self) -> np.ndarray:
        """The backing (read-only) numpy array."""
        return self._array

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the values."""
        return self._array.reshape(-1)

    def item(self):
        return self._array.item()

    def reshape(self, new_shape) -> "Tensor":
        """Same data under a new shape; products must agree."""
        new_shape = tuple(int(e) for e in new_shape)
        if any(e < 0 for e in new_shape):
            raise ShapeMismatch(f"negative extent in {new_shape}")
        if int(np.prod(new_shape, dtype=np.int64)) != self._array.size:
            raise ShapeMismatch(
                f"cannot reshape {self.shape} ({self._array.size} values) to {new_shape}"
            )
        out = Tensor.__new__(Tensor)
        arr = self._array.reshape(new_shape)
        arr.flags.writeable = False
        out._array = arr
        return out

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return (
            self.dtype == other.dtype
            and self.shape == other.shape
            and np.array_equal(self._array, other._array)
        )

    def __hash__(self):  # identity of content is what matters in caches
        return hash((self.dtype, self.shape, self._array.tobytes()))

    def __repr__(self):
        return f"Tensor({self.dtype}, shape={list(self.shape)})"


def tensor_reshape(t: Tensor, new_shape) -> Tensor:
    return t.reshape(new_shape)


def scalar_f64(value: float) -> Tensor:
    return Tensor(np.float64(value))


def scalar_i64(value: int) -> Tensor:
    return Tensor(np.int64(value))
