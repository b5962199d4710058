"""Immutable H x W x C feature map used for all layer input and output.

Element order is row-major over (row, column, channel) with the channel
index varying fastest. Storage is float32; reductions elsewhere accumulate
in float64.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInput

DTYPE = np.float32


class Tensor3:
    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.asarray(data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise InvalidInput(f"Tensor3 needs a 2-D or 3-D array, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise InvalidInput(f"Tensor3 dims must be positive, got {arr.shape}")
        arr = np.array(arr, dtype=DTYPE, order="C", copy=True)
        if not np.isfinite(arr).all():
            raise InvalidInput("Tensor3 elements must be finite")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def from_flat(cls, values, height: int, width: int, channels: int) -> "Tensor3":
        values = np.asarray(values)
        if values.size != height * width * channels:
            raise InvalidInput(
                f"{values.size} values cannot fill a {height}x{width}x{channels} tensor"
            )
        return cls(values.reshape(height, width, channels))

    @property
    def data(self) -> np.ndarray:
        """Read-only float32 view of shape (height, width, channels)."""
        return self._data

    @property
    def shape(self) -> tuple[int, int, int]:
        return self._data.shape

    @property
    def height(self) -> int:
        return self._data.shape[0]

    @property
    def width(self) -> int:
        return self._data.shape[1]

    @property
    def channels(self) -> int:
        return self._data.shape[2]

    def __eq__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self):
        h, w, c = self.shape
        return f"Tensor3({h}x{w}x{c})"


def flatten(t: Tensor3) -> np.ndarray:
    """Return the tensor's elements as a float32 vector in canonical order."""
    return t.data.reshape(-1).copy()


def reshape(vec, height: int, width: int, channels: int) -> Tensor3:
    """Inverse of :func:`flatten`."""
    return Tensor3.from_flat(vec, height, width, channels)
