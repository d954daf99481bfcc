"""1-D convolution ops and their adjoints.

conv1d, conv_transpose1d and the weight-gradient correlation close under
differentiation: each op's VJPs are written with the other two, which is what
makes gradient-penalty expressions twice differentiable.

Array layouts follow the usual convention: conv1d weight is [C_out, C_in, K],
conv_transpose1d weight is [C_in, C_out, K]. The same ndarray therefore serves
as its own adjoint weight with the channel axes reinterpreted.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .tensor import ShapeError, Tensor, _node, add, reshape


def conv1d_out_len(length: int, kernel: int, stride: int, pad: int) -> int:
    if length + 2 * pad < kernel:
        raise ShapeError(f"input length {length} + 2*pad {pad} shorter than kernel {kernel}")
    return (length + 2 * pad - kernel) // stride + 1


def conv_transpose1d_out_len(length: int, kernel: int, stride: int, pad: int, output_padding: int = 0) -> int:
    return (length - 1) * stride - 2 * pad + kernel + output_padding


def _im2col(xp: np.ndarray, kernel: int, stride: int, t_out: int) -> np.ndarray:
    b, c, _ = xp.shape
    sb, sc, sl = xp.strides
    return as_strided(xp, (b, c, t_out, kernel), (sb, sc, sl * stride, sl))


def _conv1d_raw(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    b, c, length = x.shape
    c_out, c_in, kernel = w.shape
    if c_in != c:
        raise ShapeError(f"conv1d channel mismatch: input {x.shape} vs weight {w.shape}")
    t_out = conv1d_out_len(length, kernel, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    cols = _im2col(xp, kernel, stride, t_out)
    cols2 = cols.transpose(0, 2, 1, 3).reshape(b * t_out, c * kernel)
    y = cols2 @ w.reshape(c_out, c * kernel).T
    return np.ascontiguousarray(y.reshape(b, t_out, c_out).transpose(0, 2, 1))


def _wgrad_raw(x: np.ndarray, g: np.ndarray, kernel: int, stride: int, pad: int) -> np.ndarray:
    b, c, _ = x.shape
    _, c_out, t_out = g.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
    cols = _im2col(xp, kernel, stride, t_out)
    cols2 = cols.transpose(0, 2, 1, 3).reshape(b * t_out, c * kernel)
    g2 = np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(b * t_out, c_out)
    return (g2.T @ cols2).reshape(c_out, c, kernel)


def _conv_transpose1d_raw(x: np.ndarray, w: np.ndarray, stride: int, pad: int, opad: int) -> np.ndarray:
    b, c_in, length = x.shape
    c_in2, c_out, kernel = w.shape
    if c_in2 != c_in:
        raise ShapeError(f"conv_transpose1d channel mismatch: input {x.shape} vs weight {w.shape}")
    if not 0 <= opad < max(stride, 1):
        raise ShapeError(f"output_padding {opad} must lie in [0, stride)")
    if conv_transpose1d_out_len(length, kernel, stride, pad, opad) < 1:
        raise ShapeError(f"conv_transpose1d output would be empty for input {x.shape}")
    # zero-stuff by the stride, then run a stride-1 full correlation with the
    # kernel flipped; crop `pad` from both ends
    lu = (length - 1) * stride + 1 + opad
    u = np.zeros((b, c_in, lu), dtype=x.dtype)
    u[:, :, : (length - 1) * stride + 1 : stride] = x
    w2 = np.ascontiguousarray(w.transpose(1, 0, 2)[:, :, ::-1])
    full = _conv1d_raw(u, w2, 1, kernel - 1)
    if pad:
        full = np.ascontiguousarray(full[:, :, pad:-pad])
    return full


def conv1d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation with zero padding; differentiable in x, weight, bias."""
    data = _conv1d_raw(x.data, weight.data, stride, pad)
    _, _, length = x.shape
    c_out, _, kernel = weight.shape
    t_out = data.shape[2]
    opad = (length + 2 * pad - kernel) - (t_out - 1) * stride

    def vjp(ct: Tensor):
        return (
            conv_transpose1d(ct, weight, None, stride, pad, opad),
            conv1d_wgrad(x, ct, kernel, stride, pad),
        )

    out = _node(data, (x, weight), vjp, "conv1d")
    if bias is not None:
        out = add(out, reshape(bias, (1, c_out, 1)))
    return out


def conv_transpose1d(
    x: Tensor,
    weight: Tensor,
    bias: Tensor | None = None,
    stride: int = 1,
    pad: int = 0,
    output_padding: int = 0,
) -> Tensor:
    """Adjoint of conv1d (fractionally strided convolution)."""
    data = _conv_transpose1d_raw(x.data, weight.data, stride, pad, output_padding)
    _, c_out, kernel = weight.shape

    def vjp(ct: Tensor):
        return (
            conv1d(ct, weight, None, stride, pad),
            conv1d_wgrad(ct, x, kernel, stride, pad),
        )

    out = _node(data, (x, weight), vjp, "conv_transpose1d")
    if bias is not None:
        out = add(out, reshape(bias, (1, c_out, 1)))
    return out


def conv1d_wgrad(x: Tensor, cotangent: Tensor, kernel: int, stride: int, pad: int) -> Tensor:
    """Weight gradient of conv1d: correlate input with an output cotangent."""
    data = _wgrad_raw(x.data, cotangent.data, kernel, stride, pad)
    _, _, length = x.shape
    t_out = cotangent.shape[2]
    opad = (length + 2 * pad - kernel) - (t_out - 1) * stride

    def vjp(ct: Tensor):
        return (
            conv_transpose1d(cotangent, ct, None, stride, pad, opad),
            conv1d(x, ct, None, stride, pad),
        )

    return _node(data, (x, cotangent), vjp, "conv1d_wgrad")
