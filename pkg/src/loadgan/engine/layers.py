"""Parameterized layers on top of the tensor engine."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from . import tensor as T
from .conv import conv1d, conv_transpose1d
from .tensor import ShapeError, Tensor


class Module:
    """Minimal container: parameter discovery and train/eval mode."""

    training: bool = True

    def _children(self) -> Iterator["Module"]:
        for val in vars(self).values():
            if isinstance(val, Module):
                yield val
            elif isinstance(val, (list, tuple)):
                for item in val:
                    if isinstance(item, Module):
                        yield item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                yield f"{prefix}{name}", val
            elif isinstance(val, Module):
                yield from val.named_parameters(f"{prefix}{name}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        """Non-trainable state arrays (batchnorm running stats)."""
        for name, val in vars(self).items():
            if isinstance(val, np.ndarray):
                yield f"{prefix}{name}", val
            elif isinstance(val, Module):
                yield from val.named_buffers(f"{prefix}{name}.")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_buffers(f"{prefix}{name}.{i}.")

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for child in self._children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)


def _param(rng: np.random.Generator, shape, std: float, dtype, mean: float = 0.0) -> Tensor:
    return Tensor(rng.normal(mean, std, size=shape).astype(dtype), requires_grad=True)


def _zeros_param(shape, dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def _init_std(init: str | float, fan_in: int) -> float:
    # "dcgan" suits batchnorm-stabilized stacks; "he" keeps activation scale
    # through normalization-free stacks
    if init == "dcgan":
        return 0.02
    if init == "he":
        return float(np.sqrt(2.0 / fan_in))
    return float(init)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 dtype=np.float32, init: str | float = "he"):
        self.weight = _param(rng, (in_features, out_features), _init_std(init, in_features), dtype)
        self.bias = _zeros_param(out_features, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return T.linear(x, self.weight, self.bias)


class Conv1d(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int, pad: int,
                 rng: np.random.Generator, dtype=np.float32, init: str | float = "he"):
        self.stride = stride
        self.pad = pad
        self.weight = _param(rng, (out_ch, in_ch, kernel), _init_std(init, in_ch * kernel), dtype)
        self.bias = _zeros_param(out_ch, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return conv1d(x, self.weight, self.bias, self.stride, self.pad)


class ConvTranspose1d(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel: int, stride: int, pad: int,
                 rng: np.random.Generator, dtype=np.float32, output_padding: int = 0,
                 init: str | float = "dcgan"):
        self.stride = stride
        self.pad = pad
        self.output_padding = output_padding
        self.weight = _param(rng, (in_ch, out_ch, kernel), _init_std(init, in_ch * kernel), dtype)
        self.bias = _zeros_param(out_ch, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return conv_transpose1d(x, self.weight, self.bias, self.stride, self.pad, self.output_padding)


def batchnorm1d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Per-channel batchnorm over (batch, length) for x of shape [B, C, L].

    Train mode normalizes with batch statistics (differentiable through them)
    and returns updated running stats; eval mode normalizes with the running
    stats as constants.
    """
    b, c, _ = x.shape
    g = T.reshape(gamma, (1, c, 1))
    bt = T.reshape(beta, (1, c, 1))
    if training:
        if b < 2:
            raise ShapeError("batchnorm requires batch size >= 2 in train mode")
        m = T.tmean(x, axis=(0, 2), keepdims=True)
        xc = T.sub(x, m)
        var = T.tmean(T.mul(xc, xc), axis=(0, 2), keepdims=True)
        new_mean = (1.0 - momentum) * running_mean + momentum * m.data.reshape(-1)
        new_var = (1.0 - momentum) * running_var + momentum * var.data.reshape(-1)
        inv = T.div(T._lift(1.0, x), T.sqrt(T.add(var, T._lift(eps, x))))
        out = T.add(T.mul(T.mul(xc, inv), g), bt)
        return out, new_mean.astype(running_mean.dtype), new_var.astype(running_var.dtype)
    mean_c = Tensor(running_mean.reshape(1, c, 1))
    inv_c = Tensor((1.0 / np.sqrt(running_var + eps)).reshape(1, c, 1).astype(x.dtype))
    out = T.add(T.mul(T.mul(T.sub(x, mean_c), inv_c), g), bt)
    return out, running_mean, running_var


class BatchNorm1d(Module):
    def __init__(self, channels: int, rng: np.random.Generator, dtype=np.float32,
                 eps: float = 1e-5, momentum: float = 0.1):
        self.eps = eps
        self.momentum = momentum
        self.gamma = _param(rng, channels, 0.02, dtype, mean=1.0)
        self.beta = _zeros_param(channels, dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        out, self.running_mean, self.running_var = batchnorm1d(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )
        return out
