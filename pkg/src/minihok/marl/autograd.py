"""Minimal reverse-mode automatic differentiation over float64 numpy arrays.

Only the operations the learners need are provided. Broadcasting follows
numpy; gradients are summed back to each operand's shape.
"""

from __future__ import annotations

from contextlib import contextmanager
from typing import Callable, Iterable, Sequence

import numpy as np

_GRAD_ENABLED = True


@contextmanager
def no_grad():
    """Build no graph inside the block (rollouts, target networks)."""
    global _GRAD_ENABLED
    prev, _GRAD_ENABLED = _GRAD_ENABLED, False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False,
                 _parents: tuple = (), _backward: Callable | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents = _parents
        self._backward = _backward

    # -- basics ------------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = pg if key not in grads else grads[key] + pg

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self.shape, other.shape
        return _make(self.data + other.data, (self, other),
                     lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)))

    __radd__ = __add__

    def __neg__(self):
        return _make(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        other = as_tensor(other)
        a, b = self.shape, other.shape
        return _make(self.data - other.data, (self, other),
                     lambda g: (_unbroadcast(g, a), _unbroadcast(-g, b)))

    def __rsub__(self, other):
        return as_tensor(other) - self

    def __mul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        return _make(x * y, (self, other),
                     lambda g: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data
        return _make(x / y, (self, other),
                     lambda g: (_unbroadcast(g / y, x.shape),
                                _unbroadcast(-g * x / (y * y), y.shape)))

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, p: float):
        x = self.data
        return _make(x ** p, (self,), lambda g: (g * p * x ** (p - 1),))

    def __matmul__(self, other):
        other = as_tensor(other)
        x, y = self.data, other.data

        def back(g):
            if y.ndim == 1:
                gx = np.multiply.outer(g, y)
                gy = np.tensordot(g, x, axes=(tuple(range(g.ndim)), tuple(range(x.ndim - 1))))
                return gx, gy
            gx = g @ np.swapaxes(y, -1, -2)
            gy = np.swapaxes(x, -1, -2) @ g
            return _unbroadcast(gx, x.shape), _unbroadcast(gy, y.shape)

        return _make(x @ y, (self, other), back)

    def __getitem__(self, idx):
        shape = self.shape

        def back(g):
            out = np.zeros(shape)
            np.add.at(out, idx, g)
            return (out,)

        return _make(self.data[idx], (self,), back)

    # -- reductions and shape ----------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        shape = self.shape

        def back(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return _make(self.data.sum(axis=axis, keepdims=keepdims), (self,), back)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod(
            [self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis, keepdims) * (1.0 / n)

    def max(self, axis: int = -1, keepdims: bool = False):
        idx = np.argmax(self.data, axis=axis)
        idx = np.expand_dims(idx, axis)
        return self.take(idx, axis=axis, keepdims=keepdims)

    def take(self, idx: np.ndarray, axis: int = -1, keepdims: bool = False):
        """take_along_axis with a gradient; ``idx`` has the input's ndim."""
        shape = self.shape
        out = np.take_along_axis(self.data, idx, axis=axis)

        def back(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            full = np.zeros(shape)
            index = list(np.indices(idx.shape, sparse=True))
            index[axis] = idx
            np.add.at(full, tuple(index), g)
            return (full,)

        if not keepdims:
            out = np.squeeze(out, axis=axis)
        return _make(out, (self,), back)

    def reshape(self, *shape):
        old = self.shape
        return _make(self.data.reshape(*shape), (self,), lambda g: (g.reshape(old),))

    def transpose(self, *axes):
        axes = axes or tuple(reversed(range(self.ndim)))
        inv = np.argsort(axes)
        return _make(self.data.transpose(axes), (self,), lambda g: (g.transpose(inv),))

    @property
    def T(self):
        return self.transpose()

    # -- elementwise -------------------------------------------------------

    def abs(self):
        s = np.sign(self.data)
        return _make(np.abs(self.data), (self,), lambda g: (g * s,))

    def exp(self):
        e = np.exp(self.data)
        return _make(e, (self,), lambda g: (g * e,))

    def log(self):
        x = self.data
        return _make(np.log(x), (self,), lambda g: (g / x,))

    def relu(self):
        m = self.data > 0
        return _make(self.data * m, (self,), lambda g: (g * m,))

    def elu(self):
        x = self.data
        neg = np.expm1(np.minimum(x, 0.0))
        out = np.where(x > 0, x, neg)
        return _make(out, (self,), lambda g: (g * np.where(x > 0, 1.0, neg + 1.0),))

    def tanh(self):
        t = np.tanh(self.data)
        return _make(t, (self,), lambda g: (g * (1.0 - t * t),))

    def sigmoid(self):
        s = _sigmoid(self.data)
        return _make(s, (self,), lambda g: (g * s * (1.0 - s),))

    def clip(self, lo: float, hi: float):
        x = self.data
        m = (x >= lo) & (x <= hi)
        return _make(np.clip(x, lo, hi), (self,), lambda g: (g * m,))

    def softmax(self, axis: int = -1):
        z = self.data - self.data.max(axis=axis, keepdims=True)
        e = np.exp(z)
        s = e / e.sum(axis=axis, keepdims=True)
        return _make(s, (self,),
                     lambda g: (s * (g - (g * s).sum(axis=axis, keepdims=True)),))

    def log_softmax(self, axis: int = -1):
        z = self.data - self.data.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
        out = z - lse
        s = np.exp(out)
        return _make(out, (self,), lambda g: (g - s * g.sum(axis=axis, keepdims=True),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _make(data, parents: tuple, backward: Callable) -> Tensor:
    if not _GRAD_ENABLED or not any(p.requires_grad for p in parents):
        return Tensor(data)
    return Tensor(data, True, parents, backward)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


# -- free functions ----------------------------------------------------------

def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]
    return _make(np.concatenate([t.data for t in ts], axis=axis), tuple(ts),
                 lambda g: tuple(np.split(g, splits, axis=axis)))


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    n = len(ts)
    return _make(np.stack([t.data for t in ts], axis=axis), tuple(ts),
                 lambda g: tuple(np.take(g, i, axis=axis) for i in range(n)))


def minimum(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    m = a.data <= b.data
    return _make(np.minimum(a.data, b.data), (a, b),
                 lambda g: (_unbroadcast(g * m, a.shape), _unbroadcast(g * ~m, b.shape)))


def where(cond: np.ndarray, a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(np.where(cond, a.data, b.data), (a, b),
                 lambda g: (_unbroadcast(np.where(cond, g, 0.0), a.shape),
                            _unbroadcast(np.where(cond, 0.0, g), b.shape)))


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ w + b`` as one node."""
    x = as_tensor(x)
    xd, wd = x.data, w.data
    out = xd @ wd
    if b is not None:
        out = out + b.data

    def back(g):
        g2 = g.reshape(-1, g.shape[-1])
        gw = xd.reshape(-1, xd.shape[-1]).T @ g2
        gx = g @ wd.T if x.requires_grad else None
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    parents = (x, w) if b is None else (x, w, b)
    return _make(out, parents, back)


def gru_cell(x: Tensor, h: Tensor, w_ih: Tensor, w_hh: Tensor,
             b_ih: Tensor, b_hh: Tensor) -> Tensor:
    """One GRU step (gate order r, z, n) fused into a single node.

    h' = (1 - z) * n + z * h, with
    r = σ(x W_ir + b_ir + h W_hr + b_hr), z likewise,
    n = tanh(x W_in + b_in + r * (h W_hn + b_hn)).
    """
    x, h = as_tensor(x), as_tensor(h)
    xd, hd = x.data, h.data
    H = hd.shape[-1]
    gi = xd @ w_ih.data + b_ih.data
    gh = hd @ w_hh.data + b_hh.data
    r = _sigmoid(gi[:, :H] + gh[:, :H])
    z = _sigmoid(gi[:, H:2 * H] + gh[:, H:2 * H])
    hn = gh[:, 2 * H:]
    n = np.tanh(gi[:, 2 * H:] + r * hn)
    out = (1.0 - z) * n + z * hd

    def back(g):
        dn = g * (1.0 - z)
        dz = g * (hd - n)
        dn_pre = dn * (1.0 - n * n)
        dr = dn_pre * hn
        dr_pre = dr * r * (1.0 - r)
        dz_pre = dz * z * (1.0 - z)
        dgi = np.concatenate([dr_pre, dz_pre, dn_pre], axis=1)
        dgh = np.concatenate([dr_pre, dz_pre, dn_pre * r], axis=1)
        dx = dgi @ w_ih.data.T
        dh = g * z + dgh @ w_hh.data.T
        return dx, dh, xd.T @ dgi, hd.T @ dgh, dgi.sum(axis=0), dgh.sum(axis=0)

    return _make(out, (x, h, w_ih, w_hh, b_ih, b_hh), back)


def parameters_of(modules: Iterable) -> list[Tensor]:
    out: list[Tensor] = []
    for m in modules:
        out.extend(m.parameters())
    return out
