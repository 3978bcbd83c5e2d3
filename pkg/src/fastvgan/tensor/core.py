"""Reverse-mode autodiff over dense numpy arrays.

A :class:`Tensor` wraps an ``ndarray`` together with an optional gradient
buffer and the closure needed to push gradients to its parents. Graphs are
only recorded when at least one input requires a gradient, so freezing a
set of parameters is a matter of flipping ``requires_grad``.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "Parameter", "as_tensor", "concat", "check_finite"]

# Set to False to skip the per-op finiteness check (faster, less safe).
CHECK_FINITE = True


def check_finite(arr, what="tensor"):
    # A sum is non-finite iff some element is (barring overflow of huge values).
    if CHECK_FINITE and not np.isfinite(np.sum(arr)):
        raise FloatingPointError(f"non-finite values produced by {what}")


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """An array that can record the operations applied to it."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        if self.data.dtype.kind != "f":
            self.data = self.data.astype(np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self.name = name

    # -- graph plumbing --------------------------------------------------
    @classmethod
    def _make(cls, data, parents, backward, what):
        check_finite(data, what)
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        return out

    def _accumulate(self, g):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        """Backpropagate from this tensor, accumulating into leaf ``.grad``."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)
        order, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=self.data.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            check_finite(g, "backward pass")
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # -- array protocol ----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # -- elementwise arithmetic ------------------------------------------
    def __add__(self, other):
        other = as_tensor(other, self.dtype)
        a_shape, b_shape = self.shape, other.shape

        def backward(g):
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor._make(self.data + other.data, (self, other), backward, "add")

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other):
        return self + (-as_tensor(other, self.dtype))

    def __rsub__(self, other):
        return as_tensor(other, self.dtype) + (-self)

    def __mul__(self, other):
        other = as_tensor(other, self.dtype)
        a, b = self.data, other.data

        def backward(g):
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor._make(a * b, (self, other), backward, "mul")

    __rmul__ = __mul__

    def square(self):
        a = self.data
        return Tensor._make(a * a, (self,), lambda g: (2.0 * a * g,), "square")

    # -- reductions and reshaping -----------------------------------------
    def sum(self):
        shape = self.shape
        return Tensor._make(
            np.sum(self.data), (self,), lambda g: (np.broadcast_to(g, shape),), "sum"
        )

    def mean(self):
        n = self.size
        shape = self.shape
        return Tensor._make(
            np.mean(self.data),
            (self,),
            lambda g: (np.broadcast_to(g / n, shape),),
            "mean",
        )

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.shape
        return Tensor._make(
            self.data.reshape(shape), (self,), lambda g: (g.reshape(old),), "reshape"
        )

    def broadcast_to(self, shape):
        old = self.shape
        return Tensor._make(
            np.broadcast_to(self.data, shape),
            (self,),
            lambda g: (_unbroadcast(g, old),),
            "broadcast",
        )

    def take_rows(self, index):
        """Gather rows ``self[index]`` of a 2-D tensor (embedding lookup)."""
        index = np.asarray(index)
        shape = self.shape

        def backward(g):
            out = np.zeros(shape, dtype=g.dtype)
            np.add.at(out, index, g)
            return (out,)

        return Tensor._make(self.data[index], (self,), backward, "take_rows")


class Parameter(Tensor):
    """A trainable leaf tensor carrying its Adam moment estimates."""

    __slots__ = ("m", "v", "step")

    def __init__(self, data, name=None):
        super().__init__(data, requires_grad=True, name=name)
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0


def as_tensor(x, dtype=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def concat(tensors, axis=-1):
    """Concatenate tensors along ``axis`` with gradient routing."""
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(lo, hi), axis=axis)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        )

    data = np.concatenate([t.data for t in tensors], axis=axis)
    return Tensor._make(data, tuple(tensors), backward, "concat")
