"""Central finite-difference gradient verification."""

from __future__ import annotations

import numpy as np

from .core import Tensor

__all__ = ["grad_check"]


def grad_check(f, inputs, eps=1e-4, n_coords=None, rng=None, atol=1e-8):
    """Compare analytic and numerical gradients of a scalar function.

    Parameters
    ----------
    f : callable
        Takes the ``inputs`` tensors and returns a scalar :class:`Tensor`.
    inputs : list of Tensor
        Leaves to differentiate with respect to; their ``requires_grad`` is
        forced on and their data perturbed in place (and restored).
    eps : float
        Central-difference step.
    n_coords : int, optional
        Check only this many randomly chosen coordinates per input; ``None``
        checks all of them.
    atol : float
        Floor on the denominator so that coordinates whose true gradient is
        zero do not report rounding noise as a 100% error.

    Returns
    -------
    float
        Worst per-coordinate relative error ``|a - n| / max(|a|, |n|, atol)``.
    """
    inputs = list(inputs)
    for t in inputs:
        t.requires_grad = True
        t.grad = None
    out = f(*inputs)
    out.backward()
    analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in inputs]
    rng = np.random.default_rng(0) if rng is None else rng

    worst = 0.0
    for t, a in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        if n_coords is None or n_coords >= flat.size:
            coords = np.arange(flat.size)
        else:
            coords = rng.choice(flat.size, size=n_coords, replace=False)
        a_flat = a.reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(f(*inputs).data)
            flat[i] = orig - eps
            fm = float(f(*inputs).data)
            flat[i] = orig
            num = (fp - fm) / (2 * eps)
            err = abs(a_flat[i] - num) / max(abs(a_flat[i]), abs(num), atol)
            worst = max(worst, err)
    for t in inputs:
        t.grad = None
    return worst
