"""Adam with bias correction, applied in place to :class:`Parameter` objects."""

from __future__ import annotations

import numpy as np

__all__ = ["adam_step", "Adam"]


def adam_step(params, grads=None, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
    """Apply one Adam update to every parameter.

    ``grads`` defaults to each parameter's ``.grad``; a parameter with no
    gradient is treated as having a zero gradient. All gradients are checked
    before any parameter is touched, so a non-finite gradient leaves the
    whole group unchanged.
    """
    params = list(params)
    if grads is None:
        grads = [p.grad for p in params]
    grads = [np.zeros_like(p.data) if g is None else np.asarray(g) for p, g in zip(params, grads)]
    for p, g in zip(params, grads):
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.name} {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {p.name!r}; step aborted")
    for p, g in zip(params, grads):
        p.step += 1
        p.m *= beta1
        p.m += (1.0 - beta1) * g
        p.v *= beta2
        p.v += (1.0 - beta2) * (g * g)
        m_hat = p.m / (1.0 - beta1**p.step)
        v_hat = p.v / (1.0 - beta2**p.step)
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)


class Adam:
    """Holds hyperparameters for a parameter group."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)
