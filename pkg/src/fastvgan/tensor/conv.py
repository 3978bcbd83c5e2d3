"""Convolutions on channels-last arrays ``(batch, time, freq, channels)``.

All layers use zero "same" padding: a stride-``s`` convolution maps a length
``n`` axis to ``ceil(n / s)``, and its transpose maps ``n`` back to ``n * s``.
The transposed convolution is implemented as the exact adjoint of the strided
convolution that shares its weight array, so the two kernels below
(``_im2col`` and ``_col2im``) serve forward and backward of both layers.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .core import Tensor, as_tensor

__all__ = ["conv2d", "conv2d_transposed", "conv1d", "same_padding"]


def same_padding(n, k, s):
    """Return ``(n_out, pad_before, pad_after)`` for a same-padded axis."""
    n_out = -(-n // s)
    total = max((n_out - 1) * s + k - n, 0)
    return n_out, total // 2, total - total // 2


def _im2col(xp, kt, kf, st, sf, t_out, f_out):
    b, _, _, c = xp.shape
    sb, stt, sff, sc = xp.strides
    view = as_strided(
        xp,
        shape=(b, t_out, f_out, kt, kf, c),
        strides=(sb, stt * st, sff * sf, stt, sff, sc),
        writeable=False,
    )
    return view.reshape(b * t_out * f_out, kt * kf * c)


def _col2im(cols, padded_shape, kt, kf, st, sf, t_out, f_out):
    b, _, _, c = padded_shape
    cols = cols.reshape(b, t_out, f_out, kt, kf, c)
    out = np.zeros(padded_shape, dtype=cols.dtype)
    for i in range(kt):
        for j in range(kf):
            out[:, i : i + st * t_out : st, j : j + sf * f_out : sf, :] += cols[
                :, :, :, i, j, :
            ]
    return out


def _check(x, w, name):
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"{name}: expected 4-D input and weight, got {x.shape}, {w.shape}")


def _batched(fn):
    """Let a layer accept an unbatched ``(T, F, C)`` input."""

    def wrapper(x, w, b=None, stride=(1, 1)):
        x = as_tensor(x)
        if x.ndim == 3:
            out = fn(x.reshape((1,) + x.shape), w, b, stride)
            return out.reshape(out.shape[1:])
        return fn(x, w, b, stride)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_batched
def conv2d(x, w, b=None, stride=(1, 1)):
    """Cross-correlate ``x[B,T,F,Cin]`` with ``w[kt,kf,Cin,Cout]``.

    Output shape is ``(B, ceil(T/st), ceil(F/sf), Cout)``.
    """
    w = as_tensor(w)
    _check(x, w, "conv2d")
    kt, kf, cin, cout = w.shape
    if x.shape[3] != cin:
        raise ValueError(f"conv2d: input has {x.shape[3]} channels, kernel expects {cin}")
    st, sf = stride
    bsz, t, f, _ = x.shape
    t_out, pt0, pt1 = same_padding(t, kt, st)
    f_out, pf0, pf1 = same_padding(f, kf, sf)
    xp = np.pad(x.data, ((0, 0), (pt0, pt1), (pf0, pf1), (0, 0)))
    w2 = w.data.reshape(kt * kf * cin, cout)
    out = _im2col(xp, kt, kf, st, sf, t_out, f_out) @ w2
    if b is not None:
        b = as_tensor(b)
        out += b.data
    out = out.reshape(bsz, t_out, f_out, cout)

    def backward(g):
        g2 = g.reshape(-1, cout)
        gx = gw = gb = None
        if x.requires_grad:
            gp = _col2im(g2 @ w2.T, xp.shape, kt, kf, st, sf, t_out, f_out)
            gx = gp[:, pt0 : pt0 + t, pf0 : pf0 + f, :]
        if w.requires_grad:
            gw = (_im2col(xp, kt, kf, st, sf, t_out, f_out).T @ g2).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g2.sum(axis=0)
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return Tensor._make(out, parents, backward, "conv2d")


@_batched
def conv2d_transposed(x, w, b=None, stride=(1, 1)):
    """Fractionally-strided convolution, the adjoint of :func:`conv2d`.

    ``w`` is laid out ``[kt, kf, Cout, Cin]``, i.e. exactly like the weight of
    the strided convolution mapping ``Cout`` back to ``Cin`` channels, so that
    ``<conv2d(y, w), x> == <y, conv2d_transposed(x, w)>``. Output shape is
    ``(B, T*st, F*sf, Cout)``.
    """
    w = as_tensor(w)
    _check(x, w, "conv2d_transposed")
    kt, kf, cout, cin = w.shape
    if x.shape[3] != cin:
        raise ValueError(
            f"conv2d_transposed: input has {x.shape[3]} channels, kernel expects {cin}"
        )
    st, sf = stride
    if kt < st or kf < sf:
        raise ValueError("conv2d_transposed: kernel must be at least as large as stride")
    bsz, t, f, _ = x.shape
    t_up, f_up = t * st, f * sf
    _, pt0, pt1 = same_padding(t_up, kt, st)
    _, pf0, pf1 = same_padding(f_up, kf, sf)
    padded_shape = (bsz, t_up + pt0 + pt1, f_up + pf0 + pf1, cout)
    w2 = w.data.reshape(kt * kf * cout, cin)
    x2 = x.data.reshape(-1, cin)
    full = _col2im(x2 @ w2.T, padded_shape, kt, kf, st, sf, t, f)
    out = full[:, pt0 : pt0 + t_up, pf0 : pf0 + f_up, :]
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
    else:
        out = np.ascontiguousarray(out)

    def backward(g):
        gp = np.pad(g, ((0, 0), (pt0, pt1), (pf0, pf1), (0, 0)))
        cols = _im2col(gp, kt, kf, st, sf, t, f)
        gx = gw = gb = None
        if x.requires_grad:
            gx = (cols @ w2).reshape(x.shape)
        if w.requires_grad:
            gw = (cols.T @ x2).reshape(w.shape)
        if b is not None and b.requires_grad:
            gb = g.reshape(-1, cout).sum(axis=0)
        return gx, gw, gb

    parents = (x, w) if b is None else (x, w, b)
    return Tensor._make(out, parents, backward, "conv2d_transposed")


def conv1d(x, w, b=None, stride=1):
    """Same-padded 1-D convolution of ``x[B,T,Cin]`` (or ``[T,Cin]``) with ``w[k,Cin,Cout]``."""
    x, w = as_tensor(x), as_tensor(w)
    if w.ndim != 3:
        raise ValueError(f"conv1d: expected 3-D kernel, got {w.shape}")
    if x.ndim == 2:
        out = conv1d(x.reshape((1,) + x.shape), w, b, stride)
        return out.reshape(out.shape[1:])
    k, cin, cout = w.shape
    bsz, t, _ = x.shape
    out = conv2d(x.reshape(bsz, t, 1, x.shape[2]), w.reshape(k, 1, cin, cout), b, (stride, 1))
    return out.reshape(bsz, out.shape[1], cout)
