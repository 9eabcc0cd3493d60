"""Minimal NCHW layer zoo with reverse-mode gradients, built on numpy.

All layers operate on arrays of shape (batch, channels, height, width).
``forward`` caches what ``backward`` needs; ``backward`` takes the gradient
w.r.t. the output and returns the gradient w.r.t. the input, accumulating
parameter gradients in ``self.grads``.

Convolutions fix kernel 4x4 / stride 2: ``Conv2d`` pads by 1 and halves the
spatial side exactly; ``TConv2d`` produces side 2s+2 and crops 1 from each
border, doubling exactly.  With matching kernel arrays the two are exact
adjoints, which the test suite checks by inner product.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParameterError

KERNEL = 4
STRIDE = 2
PAD = 1


class Layer:
    """Base: parameterless layers leave ``params``/``grads`` empty."""

    def __init__(self):
        self.params = {}
        self.grads = {}

    def zero_grads(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def forward(self, x, mode="infer", rng=None):
        raise NotImplementedError

    def backward(self, gy):
        raise NotImplementedError


def _im2col(xp):
    """(B, C, H, W) padded input -> (B, oh*ow, C*16) stride-2 4x4 windows."""
    win = sliding_window_view(xp, (KERNEL, KERNEL), axis=(2, 3))[:, :, ::STRIDE, ::STRIDE]
    b, c, oh, ow = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(b, oh * ow, c * KERNEL * KERNEL)
    return np.ascontiguousarray(cols), oh, ow


def _col2im(cols, b, c, oh, ow, hp, wp, dtype):
    """Adjoint of :func:`_im2col`: scatter-add columns back to (B, C, hp, wp)."""
    win = cols.reshape(b, oh, ow, c, KERNEL, KERNEL).transpose(0, 3, 1, 2, 4, 5)
    out = np.zeros((b, c, hp, wp), dtype=dtype)
    for u in range(KERNEL):
        for v in range(KERNEL):
            out[:, :, u : u + STRIDE * oh : STRIDE, v : v + STRIDE * ow : STRIDE] += win[
                :, :, :, :, u, v
            ]
    return out


class Conv2d(Layer):
    """4x4 stride-2 convolution (cross-correlation), pad 1: side s -> s/2."""

    def __init__(self, in_ch, out_ch, rng, dtype=np.float32, init_std=0.02):
        super().__init__()
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.params = {
            "kernel": rng.normal(0.0, init_std, (out_ch, in_ch, KERNEL, KERNEL)).astype(dtype),
            "bias": np.zeros(out_ch, dtype=dtype),
        }
        self.zero_grads()

    def forward(self, x, mode="infer", rng=None):
        b, c, h, w = x.shape
        if c != self.in_ch:
            raise ParameterError(f"expected {self.in_ch} input channels, got {c}")
        if h % 2 or w % 2 or h < 2 or w < 2:
            raise ParameterError(f"spatial dims must be even and >= 2, got {(h, w)}")
        xp = np.pad(x, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
        cols, oh, ow = _im2col(xp)
        self._cache = (cols, b, h, w, oh, ow)
        wm = self.params["kernel"].reshape(self.out_ch, -1)
        y = cols @ wm.T + self.params["bias"]
        return y.reshape(b, oh, ow, self.out_ch).transpose(0, 3, 1, 2)

    def backward(self, gy):
        cols, b, h, w, oh, ow = self._cache
        gym = gy.transpose(0, 2, 3, 1).reshape(b, oh * ow, self.out_ch)
        wm = self.params["kernel"].reshape(self.out_ch, -1)
        gw = np.tensordot(gym, cols, axes=([0, 1], [0, 1]))
        self.grads["kernel"] += gw.reshape(self.params["kernel"].shape)
        self.grads["bias"] += gy.sum(axis=(0, 2, 3))
        gcols = gym @ wm
        gxp = _col2im(gcols, b, self.in_ch, oh, ow, h + 2 * PAD, w + 2 * PAD, gy.dtype)
        return gxp[:, :, PAD:-PAD, PAD:-PAD]


class TConv2d(Layer):
    """4x4 stride-2 transposed convolution with border crop 1: side s -> 2s."""

    def __init__(self, in_ch, out_ch, rng, dtype=np.float32, init_std=0.02):
        super().__init__()
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.params = {
            "kernel": rng.normal(0.0, init_std, (in_ch, out_ch, KERNEL, KERNEL)).astype(dtype),
            "bias": np.zeros(out_ch, dtype=dtype),
        }
        self.zero_grads()

    def forward(self, x, mode="infer", rng=None):
        b, c, s_h, s_w = x.shape
        if c != self.in_ch:
            raise ParameterError(f"expected {self.in_ch} input channels, got {c}")
        xm = x.transpose(0, 2, 3, 1).reshape(b, s_h * s_w, self.in_ch)
        self._cache = (xm, b, s_h, s_w)
        wm = self.params["kernel"].reshape(self.in_ch, -1)
        cols = xm @ wm
        out = _col2im(
            cols, b, self.out_ch, s_h, s_w, 2 * s_h + 2, 2 * s_w + 2, x.dtype
        )
        out = out[:, :, PAD:-PAD, PAD:-PAD]
        return out + self.params["bias"][None, :, None, None]

    def backward(self, gy):
        xm, b, s_h, s_w = self._cache
        self.grads["bias"] += gy.sum(axis=(0, 2, 3))
        gyp = np.pad(gy, ((0, 0), (0, 0), (PAD, PAD), (PAD, PAD)))
        gycols, oh, ow = _im2col(gyp)  # oh == s_h, ow == s_w
        wm = self.params["kernel"].reshape(self.in_ch, -1)
        gw = np.tensordot(xm, gycols, axes=([0, 1], [0, 1]))
        self.grads["kernel"] += gw.reshape(self.params["kernel"].shape)
        gx = gycols @ wm.T
        return gx.reshape(b, s_h, s_w, self.in_ch).transpose(0, 3, 1, 2)


class BatchNorm2d(Layer):
    """Per-channel batch normalization over (batch, height, width)."""

    def __init__(self, ch, dtype=np.float32, eps=1e-5, momentum=0.9):
        super().__init__()
        self.ch = ch
        self.eps = eps
        self.momentum = momentum
        self.params = {
            "scale": np.ones(ch, dtype=dtype),
            "shift": np.zeros(ch, dtype=dtype),
        }
        self.running_mean = np.zeros(ch, dtype=dtype)
        self.running_var = np.ones(ch, dtype=dtype)
        self.zero_grads()

    def forward(self, x, mode="infer", rng=None):
        if mode == "train":
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.running_mean = (m * self.running_mean + (1 - m) * mean).astype(x.dtype)
            self.running_var = (m * self.running_var + (1 - m) * var).astype(x.dtype)
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        self._cache = (xhat, inv_std, mode)
        return (
            self.params["scale"][None, :, None, None] * xhat
            + self.params["shift"][None, :, None, None]
        )

    def backward(self, gy):
        xhat, inv_std, mode = self._cache
        self.grads["scale"] += (gy * xhat).sum(axis=(0, 2, 3))
        self.grads["shift"] += gy.sum(axis=(0, 2, 3))
        gxhat = gy * self.params["scale"][None, :, None, None]
        if mode != "train":
            return gxhat * inv_std[None, :, None, None]
        axes = (0, 2, 3)
        m = gy.shape[0] * gy.shape[2] * gy.shape[3]
        sum_g = gxhat.sum(axis=axes, keepdims=True)
        sum_gx = (gxhat * xhat).sum(axis=axes, keepdims=True)
        gx = (gxhat - sum_g / m - xhat * sum_gx / m) * inv_std[None, :, None, None]
        return gx


class LeakyReLU(Layer):
    def __init__(self, slope=0.2):
        super().__init__()
        self.slope = slope

    def forward(self, x, mode="infer", rng=None):
        self._neg = x < 0
        return np.where(self._neg, self.slope * x, x)

    def backward(self, gy):
        return np.where(self._neg, self.slope * gy, gy)


class ReLU(LeakyReLU):
    def __init__(self):
        super().__init__(slope=0.0)


class Dropout(Layer):
    """Inverted dropout: zero with probability ``rate`` in train mode, scale survivors."""

    def __init__(self, rate=0.5):
        super().__init__()
        if not 0 <= rate < 1:
            raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, mode="infer", rng=None):
        if mode != "train" or self.rate == 0:
            self._mask = None
            return x
        if rng is None:
            raise ParameterError("train-mode dropout needs an RNG")
        keep = rng.random(x.shape) >= self.rate
        self._mask = keep.astype(x.dtype) / (1.0 - self.rate)
        return x * self._mask

    def backward(self, gy):
        if self._mask is None:
            return gy
        return gy * self._mask
