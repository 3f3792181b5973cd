"""Network primitives: convolution, batch norm, ReLU, resampling, concat."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, _finite_or_raise, as_tensor, make_op

__all__ = [
    "conv2d",
    "batch_norm",
    "relu",
    "downsample2",
    "upsample2",
    "concat",
    "sum_squares",
]


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of ``(B, C, H, W)`` input with ``(O, C, k, k)`` weights."""
    if x.ndim != 4 or weight.ndim != 4:
        raise ValueError(f"conv2d expects 4-D input and weight, got {x.shape}, {weight.shape}")
    b, c, h, w = x.shape
    o, wc, kh, kw = weight.shape
    if wc != c:
        raise ValueError(f"input has {c} channels but weight expects {wc}")
    if stride < 1 or padding < 0:
        raise ValueError(f"invalid stride={stride} or padding={padding}")
    if bias is not None and bias.shape != (o,):
        raise ValueError(f"bias shape {bias.shape} does not match {o} output channels")
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError("kernel larger than padded input")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :ho, :wo]
    # (C*k*k, B*Ho*Wo)
    cols = win.transpose(1, 4, 5, 0, 2, 3).reshape(c * kh * kw, b * ho * wo)
    wmat = weight.data.reshape(o, -1)
    out = wmat @ cols
    if bias is not None:
        out += bias.data[:, None]
    out = out.reshape(o, b, ho, wo).transpose(1, 0, 2, 3)

    def backward(g):
        g2 = g.transpose(1, 0, 2, 3).reshape(o, -1)
        gw = (g2 @ cols.T).reshape(weight.shape) if weight.requires_grad else None
        gb = g2.sum(axis=1) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (wmat.T @ g2).reshape(c, kh, kw, b, ho, wo)
            gxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += \
                        gcols[:, i, j].transpose(1, 0, 2, 3)
            gx = gxp[:, :, padding:padding + h, padding:padding + w]
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return make_op(np.ascontiguousarray(out), parents, backward, "conv2d")


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-channel standardisation with batch statistics, then scale and shift.

    There is no running average: statistics always come from ``x`` itself.
    """
    if x.ndim != 4:
        raise ValueError(f"batch_norm expects (B, C, H, W), got {x.shape}")
    c = x.shape[1]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError(f"gamma/beta must match the {c} input channels, got "
                         f"{gamma.shape}, {beta.shape}")
    axes = (0, 2, 3)
    m = x.data.size // c
    mean = x.data.mean(axis=axes, keepdims=True)
    centered = x.data - mean
    with np.errstate(over="ignore"):
        var = (centered * centered).mean(axis=axes, keepdims=True)
    _finite_or_raise(var, "batch_norm variance")
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv_std
    g4 = gamma.data.reshape(1, c, 1, 1)
    out = xhat * g4 + beta.data.reshape(1, c, 1, 1)

    def backward(g):
        ggamma = (g * xhat).sum(axis=axes) if gamma.requires_grad else None
        gbeta = g.sum(axis=axes) if beta.requires_grad else None
        gx = None
        if x.requires_grad:
            gxhat = g * g4
            gx = (inv_std / m) * (
                m * gxhat
                - gxhat.sum(axis=axes, keepdims=True)
                - xhat * (gxhat * xhat).sum(axis=axes, keepdims=True)
            )
        return gx, ggamma, gbeta

    return make_op(out, (x, gamma, beta), backward, "batch_norm")


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_op(np.where(mask, x.data, 0.0).astype(x.dtype, copy=False), (x,),
                   lambda g: (g * mask,), "relu")


def downsample2(x: Tensor) -> Tensor:
    """2x2 average pooling with stride 2."""
    *lead, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"downsample2 needs even spatial extents, got {h}x{w}")
    out = x.data.reshape(*lead, h // 2, 2, w // 2, 2).mean(axis=(-3, -1))

    def backward(g):
        return (np.repeat(np.repeat(g, 2, axis=-2), 2, axis=-1) * 0.25,)

    return make_op(out, (x,), backward, "downsample2")


@lru_cache(maxsize=32)
def upsample_matrix(n: int, dtype=np.float64) -> np.ndarray:
    """``(2n, n)`` linear interpolation matrix, half-pixel centres, edges clamped."""
    pos = np.clip((np.arange(2 * n) + 0.5) / 2 - 0.5, 0, n - 1)
    i0 = np.floor(pos).astype(int)
    i1 = np.minimum(i0 + 1, n - 1)
    frac = pos - i0
    mat = np.zeros((2 * n, n), dtype=dtype)
    rows = np.arange(2 * n)
    np.add.at(mat, (rows, i0), 1 - frac)
    np.add.at(mat, (rows, i1), frac)
    mat.setflags(write=False)
    return mat


def upsample2(x: Tensor) -> Tensor:
    """Bilinear 2x upsampling of the last two axes."""
    h, w = x.shape[-2:]
    uh = upsample_matrix(h, x.dtype)
    uw = upsample_matrix(w, x.dtype)
    out = uh @ x.data @ uw.T
    return make_op(out, (x,), lambda g: (uh.T @ g @ uw,), "upsample2")


def concat(tensors, axis: int = 1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    return make_op(out, tensors, lambda g: tuple(np.split(g, sizes, axis=axis)), "concat")


def sum_squares(x: Tensor) -> Tensor:
    """Squared Euclidean norm ``sum(x**2)`` as a scalar tensor."""
    data = x.data
    return make_op(np.asarray(np.vdot(data, data)), (x,),
                   lambda g: (2.0 * g * data,), "sum_squares")
