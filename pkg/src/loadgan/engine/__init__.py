"""Numeric engine: tensors, reverse-mode autodiff, layers, Adam."""

from .adam import Adam
from .conv import (
    conv1d,
    conv1d_out_len,
    conv1d_wgrad,
    conv_transpose1d,
    conv_transpose1d_out_len,
)
from .layers import BatchNorm1d, Conv1d, ConvTranspose1d, Linear, Module, batchnorm1d
from .tensor import (
    CapabilityError,
    GraphError,
    ShapeError,
    Tensor,
    as_tensor,
    concat,
    gelu,
    grad,
    grad_enabled,
    input_gradient,
    leaky_relu,
    linear,
    no_grad,
    reshape,
    set_finite_checks,
    sigmoid,
    softmax,
    sqrt,
    tmean,
    tsum,
)

__all__ = [
    "Adam",
    "BatchNorm1d",
    "CapabilityError",
    "Conv1d",
    "ConvTranspose1d",
    "GraphError",
    "Linear",
    "Module",
    "ShapeError",
    "Tensor",
    "as_tensor",
    "batchnorm1d",
    "concat",
    "conv1d",
    "conv1d_out_len",
    "conv1d_wgrad",
    "conv_transpose1d",
    "conv_transpose1d_out_len",
    "gelu",
    "grad",
    "grad_enabled",
    "input_gradient",
    "leaky_relu",
    "linear",
    "no_grad",
    "reshape",
    "set_finite_checks",
    "sigmoid",
    "softmax",
    "sqrt",
    "tmean",
    "tsum",
]
