"""Dense-tensor reverse-mode autodiff engine.

Eager evaluation on numpy arrays with a recorded tape. Every VJP is itself
expressed in terms of engine ops, so gradients are differentiable again
(double backprop, needed for the critic gradient penalty).
"""

from __future__ import annotations

import contextlib
import math
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested op."""


class GraphError(RuntimeError):
    """Backward called on an invalid root (non-scalar or detached)."""


class CapabilityError(RuntimeError):
    """Gradient requested from a graph that was not recorded."""


_grad_enabled = True
_finite_checks = False


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (inference mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


def set_finite_checks(enabled: bool) -> None:
    """Toggle the NaN/Inf detection hook applied after every op."""
    global _finite_checks
    _finite_checks = enabled


class Tensor:
    """Value node of the computation graph.

    Leaf tensors are created directly; interior nodes are created by ops and
    carry their parents plus a VJP closure mapping the output cotangent to
    per-parent cotangent contributions.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_vjp", "_nograd")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._vjp: Callable | None = None
        self._nograd = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self) -> None:
        """Accumulate gradients of this scalar into .grad of all leaf tensors."""
        if not self.requires_grad:
            if self._nograd:
                raise CapabilityError(
                    "gradient requested from a graph built under no_grad (recording disabled)"
                )
            if self.data.size != 1:
                raise GraphError(f"backward root must be scalar, got shape {self.shape}")
            return
        for node, ct in _backprop(self):
            if not node._parents and node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad = node.grad + ct.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # operator sugar; constants are lifted with the peer's dtype
    def __add__(self, other):
        return add(self, _lift(other, self))

    def __radd__(self, other):
        return add(_lift(other, self), self)

    def __sub__(self, other):
        return sub(self, _lift(other, self))

    def __rsub__(self, other):
        return sub(_lift(other, self), self)

    def __mul__(self, other):
        return mul(self, _lift(other, self))

    def __rmul__(self, other):
        return mul(_lift(other, self), self)

    def __truediv__(self, other):
        return div(self, _lift(other, self))

    def __rtruediv__(self, other):
        return div(_lift(other, self), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return pow_const(self, n)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def _lift(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


def _node(data: np.ndarray, parents: tuple, vjp, op: str) -> Tensor:
    """Wrap an op result; records the tape edge only when grad is enabled."""
    if _finite_checks and not np.all(np.isfinite(data)):
        raise FloatingPointError(f"non-finite values produced by op '{op}'")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out._nograd = not _grad_enabled
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._vjp = vjp
    else:
        out.requires_grad = False
        out._parents = ()
        out._vjp = None
    return out


def _unbroadcast(ct: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Reduce a cotangent of broadcast shape back to the operand shape."""
    if ct.shape == shape:
        return ct
    extra = len(ct.shape) - len(shape)
    if extra:
        ct = tsum(ct, axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and ct.shape[i] != 1)
    if axes:
        ct = tsum(ct, axis=axes, keepdims=True)
    return ct


# --- elementwise arithmetic ---------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    return _node(
        a.data + b.data,
        (a, b),
        lambda ct: (_unbroadcast(ct, a.shape), _unbroadcast(ct, b.shape)),
        "add",
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    return _node(
        a.data - b.data,
        (a, b),
        lambda ct: (_unbroadcast(ct, a.shape), _unbroadcast(neg(ct), b.shape)),
        "sub",
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    return _node(
        a.data * b.data,
        (a, b),
        lambda ct: (_unbroadcast(mul(ct, b), a.shape), _unbroadcast(mul(ct, a), b.shape)),
        "mul",
    )


def div(a: Tensor, b: Tensor) -> Tensor:
    return _node(
        a.data / b.data,
        (a, b),
        lambda ct: (
            _unbroadcast(div(ct, b), a.shape),
            _unbroadcast(neg(div(mul(ct, a), mul(b, b))), b.shape),
        ),
        "div",
    )


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda ct: (neg(ct),), "neg")


def pow_const(a: Tensor, n: float) -> Tensor:
    return _node(
        a.data**n,
        (a,),
        lambda ct: (mul(ct, mul(_lift(n, a), pow_const(a, n - 1))),),
        "pow",
    )


def exp(a: Tensor) -> Tensor:
    out = _node(np.exp(a.data), (a,), None, "exp")
    if out.requires_grad:
        out._vjp = lambda ct: (mul(ct, out),)
    return out


def log(a: Tensor) -> Tensor:
    return _node(np.log(a.data), (a,), lambda ct: (div(ct, a),), "log")


def tanh(a: Tensor) -> Tensor:
    out = _node(np.tanh(a.data), (a,), None, "tanh")
    if out.requires_grad:
        out._vjp = lambda ct: (mul(ct, sub(_lift(1.0, out), mul(out, out))),)
    return out


def sigmoid(a: Tensor) -> Tensor:
    # stable logistic: exp only ever sees non-positive arguments
    x = a.data
    out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out_data = out_data.astype(x.dtype)
    out = _node(out_data, (a,), None, "sigmoid")
    if out.requires_grad:
        out._vjp = lambda ct: (mul(ct, mul(out, sub(_lift(1.0, out), out))),)
    return out


_SQRT_VJP_FLOOR = 1e-12


def sqrt(a: Tensor) -> Tensor:
    out = _node(np.sqrt(a.data), (a,), None, "sqrt")
    if out.requires_grad:
        # subgradient choice at 0: clamp the denominator so a zero-gradient
        # penalty path propagates 0 instead of NaN
        out._vjp = lambda ct: (div(ct, mul(_lift(2.0, out), maximum_const(out, _SQRT_VJP_FLOOR))),)
    return out


def maximum_const(a: Tensor, c: float) -> Tensor:
    mask = (a.data > c).astype(a.data.dtype)
    return _node(
        np.maximum(a.data, c),
        (a,),
        lambda ct: (mul(ct, Tensor(mask)),),
        "maximum_const",
    )


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    mask = np.where(a.data > 0, 1.0, slope).astype(a.data.dtype)
    return _node(a.data * mask, (a,), lambda ct: (mul(ct, Tensor(mask)),), "leaky_relu")


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a: Tensor) -> Tensor:
    """GELU via the tanh approximation 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715x^3)))."""
    inner = mul(_lift(_GELU_C, a), add(a, mul(_lift(0.044715, a), mul(a, mul(a, a)))))
    return mul(mul(_lift(0.5, a), a), add(_lift(1.0, a), tanh(inner)))


# --- reductions and shape ops -------------------------------------------


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = np.sum(a.data, axis=axis, keepdims=keepdims)
    if axis is None:
        axes: tuple[int, ...] = tuple(range(a.data.ndim))
    elif isinstance(axis, int):
        axes = (axis % a.data.ndim,)
    else:
        axes = tuple(ax % a.data.ndim for ax in axis)

    def vjp(ct: Tensor):
        g = ct
        if not keepdims:
            shape = list(a.shape)
            for ax in axes:
                shape[ax] = 1
            g = reshape(g, tuple(shape))
        return (broadcast_to(g, a.shape),)

    return _node(np.asarray(data), (a,), vjp, "sum")


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        n = a.data.size
    elif isinstance(axis, int):
        n = a.shape[axis]
    else:
        n = 1
        for ax in axis:
            n *= a.shape[ax]
    return mul(tsum(a, axis=axis, keepdims=keepdims), _lift(1.0 / n, a))


def broadcast_to(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return _node(
        np.broadcast_to(a.data, shape).copy(),
        (a,),
        lambda ct: (_unbroadcast(ct, a.shape),),
        "broadcast_to",
    )


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return _node(
        a.data.reshape(shape),
        (a,),
        lambda ct: (reshape(ct, a.shape),),
        "reshape",
    )


def swapaxes(a: Tensor, ax1: int, ax2: int) -> Tensor:
    return _node(
        np.swapaxes(a.data, ax1, ax2).copy(),
        (a,),
        lambda ct: (swapaxes(ct, ax1, ax2),),
        "swapaxes",
    )


def flip(a: Tensor, axis: int) -> Tensor:
    return _node(
        np.flip(a.data, axis=axis).copy(),
        (a,),
        lambda ct: (flip(ct, axis),),
        "flip",
    )


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = list(tensors)
    data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def vjp(ct: Tensor):
        return tuple(
            slice_axis(ct, axis, int(offsets[i]), int(offsets[i + 1]))
            for i in range(len(tensors))
        )

    return _node(data, tuple(tensors), vjp, "concat")


def slice_axis(a: Tensor, axis: int, start: int, stop: int) -> Tensor:
    idx = [slice(None)] * a.data.ndim
    idx[axis] = slice(start, stop)
    full = a.shape[axis]
    return _node(
        a.data[tuple(idx)].copy(),
        (a,),
        lambda ct: (pad_zeros(ct, axis, start, full - stop),),
        "slice_axis",
    )


def pad_zeros(a: Tensor, axis: int, before: int, after: int) -> Tensor:
    pads = [(0, 0)] * a.data.ndim
    pads[axis] = (before, after)
    stop = before + a.shape[axis]
    return _node(
        np.pad(a.data, pads),
        (a,),
        lambda ct: (slice_axis(ct, axis, before, stop),),
        "pad_zeros",
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul expects [n,k]@[k,m], got {a.shape} @ {b.shape}")
    return _node(
        a.data @ b.data,
        (a, b),
        lambda ct: (matmul(ct, swapaxes(b, 0, 1)), matmul(swapaxes(a, 0, 1), ct)),
        "matmul",
    )


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map x @ W + b for x of shape [B, in], W of shape [in, out]."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shift = Tensor(np.max(a.data, axis=axis, keepdims=True))
    e = exp(sub(a, shift))
    return div(e, tsum(e, axis=axis, keepdims=True))


# --- backward machinery ---------------------------------------------------


def _toposort(root: Tensor) -> list[Tensor]:
    topo: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    return topo


def _backprop(root: Tensor) -> list[tuple[Tensor, Tensor]]:
    """Run reverse-mode accumulation from a scalar root.

    Returns (node, cotangent) pairs; each node is visited exactly once in
    reverse topological order, so accumulation order is deterministic.
    """
    if root.data.size != 1:
        raise GraphError(f"backward root must be scalar, got shape {root.shape}")
    topo = _toposort(root)
    cts: dict[int, Tensor] = {id(root): Tensor(np.ones_like(root.data))}
    out: list[tuple[Tensor, Tensor]] = []
    for node in reversed(topo):
        ct = cts.pop(id(node), None)
        if ct is None:
            continue
        out.append((node, ct))
        if node._vjp is None:
            continue
        contribs = node._vjp(ct)
        for parent, contrib in zip(node._parents, contribs):
            if contrib is None or not parent.requires_grad:
                continue
            prev = cts.get(id(parent))
            cts[id(parent)] = contrib if prev is None else add(prev, contrib)
    return out


def grad(output: Tensor, inputs: Sequence[Tensor]) -> list[Tensor]:
    """Gradients of a scalar output w.r.t. inputs, as graph tensors.

    The returned tensors are recorded on the tape, so they can be composed
    and differentiated again (second-order reverse mode). Inputs that the
    output does not depend on get zero gradients.
    """
    if not output.requires_grad:
        if output._nograd:
            raise CapabilityError(
                "gradient requested from a graph built under no_grad (recording disabled)"
            )
        if output.data.size != 1:
            raise GraphError(f"backward root must be scalar, got shape {output.shape}")
        return [Tensor(np.zeros_like(inp.data)) for inp in inputs]
    cts = dict((id(n), ct) for n, ct in _backprop(output))
    result = []
    for inp in inputs:
        ct = cts.get(id(inp))
        if ct is None:
            ct = Tensor(np.zeros_like(inp.data))
        result.append(ct)
    return result


def input_gradient(output_sum: Tensor, wrt: Tensor) -> Tensor:
    """Gradient of a scalar network output w.r.t. an input tensor.

    The result stays on the tape so expressions built from it (e.g. the
    gradient penalty) are differentiable w.r.t. parameters.
    """
    return grad(output_sum, [wrt])[0]
