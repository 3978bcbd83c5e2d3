"""Minimal reverse-mode autodiff with the layer set the model needs."""

from .conv import conv1d, conv2d, conv2d_transposed, same_padding
from .core import Parameter, Tensor, as_tensor, concat
from .functional import leaky_relu, mse, residual_block, rmse, swish
from .gradcheck import grad_check
from .optim import Adam, adam_step

__all__ = [
    "Tensor",
    "Parameter",
    "as_tensor",
    "concat",
    "conv1d",
    "conv2d",
    "conv2d_transposed",
    "same_padding",
    "swish",
    "leaky_relu",
    "rmse",
    "mse",
    "residual_block",
    "grad_check",
    "adam_step",
    "Adam",
]
