"""
NN Ops Primitive

Differentiable layer functions on Tensor, each with an explicit backward.

Interface:
- conv2d(x, weight, bias=None, stride=1, padding=0) → Tensor
- group_norm(x, groups, gain, bias, eps=1e-5) → Tensor
- silu(x) → Tensor
- linear(x, weight, bias=None) → Tensor
- softmax(x, axis=-1) → Tensor
- attention(x, wq, bq, wk, bk, wv, bv) → (Tensor, Tensor)
- self_attention(x, wq, bq, wk, bk, wv, bv, return_weights=False) → Tensor
- upsample_nearest2x(x) → Tensor
- concat(tensors, axis=1) → Tensor
- clip(x, low, high) → Tensor
- sum_squares(x) → Tensor

Image tensors are (batch, channels, height, width); (channels, height, width)
inputs are accepted by conv2d and group_norm and returned without the batch axis.
"""

from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from src.primitives.errors import ShapeMismatchError
from src.primitives.tensor import Tensor


def _batched(x: Tensor) -> tuple[Tensor, bool]:
    if x.ndim == 3:
        return x.reshape((1,) + x.shape), True
    if x.ndim != 4:
        raise ShapeMismatchError(f"expected (N,C,H,W) or (C,H,W) input, got {x.shape}")
    return x, False


def conv2d(
    x: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2D cross-correlation.

    Args:
        x: Input (N, C, H, W)
        weight: Kernel (O, C, Kh, Kw)
        bias: Optional (O,)
        stride: Step between output positions (>= 1)
        padding: Zero padding on every side (>= 0)

    Returns:
        Tensor: (N, O, (H + 2p - Kh)//s + 1, (W + 2p - Kw)//s + 1)

    Raises:
        ShapeMismatchError: On channel mismatch, bad stride/padding or empty output
    """
    x, squeeze = _batched(x)
    if weight.ndim != 4 or weight.shape[1] != x.shape[1]:
        raise ShapeMismatchError(f"kernel {weight.shape} does not match input channels {x.shape[1]}")
    if stride < 1 or padding < 0:
        raise ShapeMismatchError(f"invalid stride={stride} or padding={padding}")

    n, c, h, w = x.shape
    o, _, kh, kw = weight.shape
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeMismatchError(f"kernel {kh}x{kw} larger than padded input {h}x{w}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    kernel = weight.data
    row_span = stride * (ho - 1) + 1
    col_span = stride * (wo - 1) + 1

    def window(array, ki, kj):
        return array[:, :, ki:ki + row_span:stride, kj:kj + col_span:stride]

    out = np.zeros((n, o, ho, wo), dtype=np.result_type(x.data, kernel))
    for ki in range(kh):
        for kj in range(kw):
            # (N, C, Ho, Wo) x (O, C) -> (N, Ho, Wo, O)
            out += np.moveaxis(np.tensordot(window(xp, ki, kj), kernel[:, :, ki, kj], axes=([1], [1])), 3, 1)
    if bias is not None:
        out += bias.data[None, :, None, None]

    def backward(g):
        gxp = np.zeros_like(xp, dtype=g.dtype)
        gw = np.zeros_like(kernel, dtype=g.dtype)
        for ki in range(kh):
            for kj in range(kw):
                gw[:, :, ki, kj] = np.tensordot(g, window(xp, ki, kj), axes=([0, 2, 3], [0, 2, 3]))
                window(gxp, ki, kj)[...] += np.moveaxis(
                    np.tensordot(g, kernel[:, :, ki, kj], axes=([1], [0])), 3, 1
                )
        gx = gxp[:, :, padding:padding + h, padding:padding + w]
        gb = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return gx, gw, gb

    parents = (x, weight) + ((bias,) if bias is not None else ())
    result = Tensor.make(out, parents, backward)
    return result.reshape(result.shape[1:]) if squeeze else result


def group_norm(
    x: Tensor, groups: int, gain: Tensor, bias: Tensor, eps: float = 1e-5
) -> Tensor:
    """
    Group normalization: per (sample, group) zero mean, unit variance, then
    a per-channel affine map.

    Raises:
        ShapeMismatchError: If channels are not divisible by groups
    """
    x, squeeze = _batched(x)
    n, c, h, w = x.shape
    if groups < 1 or c % groups != 0:
        raise ShapeMismatchError(f"{c} channels not divisible into {groups} groups")

    xg = x.data.reshape(n, groups, -1)
    m = xg.shape[2]
    mean = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = ((xg - mean) * inv_std).reshape(n, c, h, w)
    g_c = gain.data.reshape(1, c, 1, 1)
    out = xhat * g_c + bias.data.reshape(1, c, 1, 1)

    def backward(g):
        gxhat = (g * g_c).reshape(n, groups, m)
        xh = xhat.reshape(n, groups, m)
        gx = inv_std / m * (
            m * gxhat
            - gxhat.sum(axis=2, keepdims=True)
            - xh * (gxhat * xh).sum(axis=2, keepdims=True)
        )
        ggain = (g * xhat).sum(axis=(0, 2, 3)).reshape(gain.shape)
        gbias = g.sum(axis=(0, 2, 3)).reshape(bias.shape)
        return gx.reshape(n, c, h, w), ggain, gbias

    result = Tensor.make(out, (x, gain, bias), backward)
    return result.reshape(result.shape[1:]) if squeeze else result


def silu(x: Tensor) -> Tensor:
    """x * sigmoid(x)"""
    s = expit(x.data)
    return Tensor.make(x.data * s, (x,), lambda g: (g * s * (1.0 + x.data * (1.0 - s)),))


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """y = x W^T + b with W of shape (out, in); any leading axes on x."""
    if x.shape[-1] != weight.shape[1]:
        raise ShapeMismatchError(f"linear input {x.shape} does not match weight {weight.shape}")
    y = x @ weight.transpose()
    return y + bias if bias is not None else y


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return Tensor.make(
        y, (x,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),)
    )


def attention(
    x: Tensor,
    wq: Tensor,
    bq: Tensor,
    wk: Tensor,
    bk: Tensor,
    wv: Tensor,
    bv: Tensor,
) -> tuple[Tensor, Tensor]:
    """
    Single-head scaled dot-product attention over spatial positions:
    softmax(q k^T / sqrt(C)) v, without the residual.

    Args:
        x: (N, C, H, W)
        wq, wk, wv: (C, C) projections; bq, bk, bv: (C,)

    Returns:
        (attended (N, C, H, W), weights (N, HW, HW))
    """
    if x.ndim != 4:
        raise ShapeMismatchError(f"attention expects (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    for proj in (wq, wk, wv):
        if proj.shape != (c, c):
            raise ShapeMismatchError(f"attention projection {proj.shape} does not match {c} channels")

    tokens = x.reshape(n, c, h * w).transpose(0, 2, 1)
    q = linear(tokens, wq, bq)
    k = linear(tokens, wk, bk)
    v = linear(tokens, wv, bv)
    weights = softmax((q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(c)), axis=-1)
    attended = (weights @ v).transpose(0, 2, 1).reshape(n, c, h, w)
    return attended, weights


def self_attention(
    x: Tensor,
    wq: Tensor,
    bq: Tensor,
    wk: Tensor,
    bk: Tensor,
    wv: Tensor,
    bv: Tensor,
    return_weights: bool = False,
):
    """
    Residual self-attention: out = x + attention(x).

    Returns:
        Tensor, or (Tensor, np.ndarray of weights) when return_weights is set
    """
    attended, weights = attention(x, wq, bq, wk, bk, wv, bv)
    out = x + attended
    if return_weights:
        return out, weights.data
    return out


def upsample_nearest2x(x: Tensor) -> Tensor:
    """Repeat every pixel into a 2x2 block."""
    n, c, h, w = x.shape
    out = x.data.repeat(2, axis=2).repeat(2, axis=3)
    return Tensor.make(
        out, (x,), lambda g: (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)
    )


def concat(tensors: Sequence[Tensor], axis: int = 1) -> Tensor:
    """Concatenate along an axis (channels by default)."""
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeMismatchError(f"cannot concatenate {[t.shape for t in tensors]}: {e}") from e
    return Tensor.make(out, tuple(tensors), lambda g: tuple(np.split(g, cuts, axis=axis)))


def clip(x: Tensor, low: float, high: float) -> Tensor:
    """Clamp values; gradient passes only where the input lies inside [low, high]."""
    inside = (x.data >= low) & (x.data <= high)
    return Tensor.make(np.clip(x.data, low, high), (x,), lambda g: (g * inside,))


def sum_squares(x: Tensor) -> Tensor:
    """Squared L2 norm as a scalar tensor."""
    return x.square().sum()
