"""Forward-only layer kernels: convolution with an SVM filter bank,
activations, pooling and zero padding.

Convolution is cross-correlation (no kernel flip) and never pads
implicitly. Output sizes use floor division::

    n_out = (n_in + 2p - k) // s + 1

so a 128 px input with a 7 px kernel at stride 2 gives 61, not 61.5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument, InvalidGeometry, InvalidInput
from .tensor import DTYPE, Tensor3

POOL_MODES = ("max", "mean")


def conv_output_size(n_in: int, p: int, k: int, s: int) -> int:
    if n_in < 1 or p < 0 or k < 1 or s < 1:
        raise InvalidArgument(f"bad geometry n_in={n_in} p={p} k={k} s={s}")
    if n_in + 2 * p < k:
        raise InvalidGeometry(f"kernel {k} larger than padded input {n_in + 2 * p}")
    return (n_in + 2 * p - k) // s + 1


class FilterBank:
    """Stack of n_filters kernels of shape (k, k, in_channels), applied at `stride`."""

    __slots__ = ("_weights", "stride")

    def __init__(self, weights, stride: int = 1):
        w = np.array(weights, dtype=DTYPE, order="C", copy=True)
        if w.ndim != 4 or w.shape[1] != w.shape[2]:
            raise InvalidInput(f"filter stack must be (n, k, k, C), got {w.shape}")
        if min(w.shape) < 1:
            raise InvalidInput(f"filter stack dims must be positive, got {w.shape}")
        if not np.isfinite(w).all():
            raise InvalidInput("filter weights must be finite")
        if stride < 1:
            raise InvalidArgument(f"stride must be >= 1, got {stride}")
        w.flags.writeable = False
        self._weights = w
        self.stride = int(stride)

    @classmethod
    def from_vectors(cls, vectors, kernel: int, in_channels: int, stride: int = 1) -> "FilterBank":
        """Reshape flat weight vectors (each of length k*k*C) into a filter stack."""
        vecs = np.asarray(vectors)
        if vecs.ndim != 2 or vecs.shape[1] != kernel * kernel * in_channels:
            raise InvalidInput(
                f"expected vectors of length {kernel * kernel * in_channels}, got shape {vecs.shape}"
            )
        return cls(vecs.reshape(-1, kernel, kernel, in_channels), stride)

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def n_filters(self) -> int:
        return self._weights.shape[0]

    @property
    def kernel(self) -> int:
        return self._weights.shape[1]

    @property
    def in_channels(self) -> int:
        return self._weights.shape[3]

    def __eq__(self, other):
        if not isinstance(other, FilterBank):
            return NotImplemented
        return self.stride == other.stride and np.array_equal(self._weights, other._weights)

    def __repr__(self):
        n, k, _, c = self._weights.shape
        return f"FilterBank({n}x{k}x{k}x{c}, stride={self.stride})"


@dataclass(frozen=True)
class PoolSpec:
    window: int = 3
    stride: int = 2
    mode: str = "max"

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise InvalidArgument(f"pool window/stride must be >= 1: {self}")
        if self.mode not in POOL_MODES:
            raise InvalidArgument(f"pool mode must be one of {POOL_MODES}, got {self.mode!r}")


def zero_pad(t: Tensor3, p: int) -> Tensor3:
    if p < 0:
        raise InvalidArgument(f"padding must be >= 0, got {p}")
    if p == 0:
        return t
    return Tensor3(np.pad(t.data, ((p, p), (p, p), (0, 0))))


def _windows(arr: np.ndarray, k: int, s: int) -> np.ndarray:
    """(H, W, C) -> (Ho, Wo, k, k, C) strided view of every k x k window."""
    v = sliding_window_view(arr, (k, k), axis=(0, 1))[::s, ::s]
    return v.transpose(0, 1, 3, 4, 2)


def conv2d(t: Tensor3, bank: FilterBank, p: int = 0) -> Tensor3:
    if t.channels != bank.in_channels:
        raise InvalidInput(
            f"input has {t.channels} channels, filter bank expects {bank.in_channels}"
        )
    k, s = bank.kernel, bank.stride
    ho = conv_output_size(t.height, p, k, s)
    wo = conv_output_size(t.width, p, k, s)
    x = zero_pad(t, p).data
    cols = _windows(x, k, s).reshape(ho * wo, k * k * t.channels).astype(np.float64)
    w = bank.weights.reshape(bank.n_filters, -1).astype(np.float64)
    out = cols @ w.T
    return Tensor3(out.reshape(ho, wo, bank.n_filters))


def relu(t: Tensor3) -> Tensor3:
    return Tensor3(np.maximum(t.data, 0))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(t: Tensor3) -> Tensor3:
    """1 / (1 + exp(-z)), evaluated without overflow."""
    return Tensor3(_sigmoid(t.data.astype(np.float64)))


def tanh_paper(t: Tensor3) -> Tensor3:
    """(1 - exp(-z)) / (1 + exp(-z)), i.e. tanh(z / 2), not tanh(z).

    For z < 0 numerator and denominator are multiplied by exp(z) so the
    exponent never overflows.
    """
    z = t.data.astype(np.float64)
    e = np.exp(-np.abs(z))
    return Tensor3(np.sign(z) * (1.0 - e) / (1.0 + e))


ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "tanh_paper": tanh_paper}


def activate(t: Tensor3, name: str) -> Tensor3:
    try:
        fn = ACTIVATIONS[name]
    except KeyError:
        raise InvalidArgument(f"unknown activation {name!r}; choose from {sorted(ACTIVATIONS)}") from None
    return fn(t)


def pool(t: Tensor3, spec: PoolSpec) -> Tensor3:
    if spec.window > min(t.height, t.width):
        raise InvalidGeometry(
            f"pool window {spec.window} larger than input {t.height}x{t.width}"
        )
    win = _windows(t.data, spec.window, spec.stride)
    if spec.mode == "max":
        out = win.max(axis=(2, 3))
    else:
        out = win.astype(np.float64).mean(axis=(2, 3))
    return Tensor3(out)
