"""Activations, losses and the residual block."""

from __future__ import annotations

import numpy as np

from .conv import conv2d
from .core import Tensor, as_tensor

__all__ = ["swish", "leaky_relu", "rmse", "mse", "residual_block"]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def swish(x):
    """``x * sigmoid(x)``."""
    x = as_tensor(x)
    s = _sigmoid(x.data)
    out = x.data * s

    def backward(g):
        return (g * (s + out * (1.0 - s)),)

    return Tensor._make(out, (x,), backward, "swish")


def leaky_relu(x, slope=0.2):
    x = as_tensor(x)
    pos = x.data > 0
    out = np.where(pos, x.data, slope * x.data)

    def backward(g):
        return (np.where(pos, g, slope * g),)

    return Tensor._make(out, (x,), backward, "leaky_relu")


def _difference(a, b, name):
    a = as_tensor(a)
    b = as_tensor(b, a.dtype)
    if b.ndim and a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")
    return a, b, a.data - b.data


def mse(a, b):
    """Mean squared error; ``b`` may be a scalar target (e.g. 1 or 0)."""
    a, b, d = _difference(a, b, "mse")
    n = d.size
    b_shape = b.shape

    def backward(g):
        ga = (2.0 / n) * g * d
        return ga, (-ga if b_shape else -ga.sum())

    return Tensor._make(np.mean(d * d), (a, b), backward, "mse")


def rmse(a, b):
    """Root mean squared error. The gradient at a perfect match is taken as 0."""
    a, b, d = _difference(a, b, "rmse")
    n = d.size
    value = np.sqrt(np.mean(d * d))

    def backward(g):
        if value == 0:
            ga = np.zeros_like(d)
        else:
            ga = g * d / (n * value)
        return ga, -ga if b.shape else -ga.sum()

    return Tensor._make(value, (a, b), backward, "rmse")


def residual_block(x, w1, b1, w2, b2):
    """Pre-activation residual unit ``x + conv(swish(conv(swish(x))))``."""
    x = as_tensor(x)
    if w1.shape[2] != x.shape[-1] or w2.shape[3] != x.shape[-1]:
        raise ValueError("residual_block: kernels must preserve the channel count")
    h = conv2d(swish(x), w1, b1)
    h = conv2d(swish(h), w2, b2)
    return x + h
