"""Minimal reverse-mode automatic differentiation over dense float64 tensors.

Tensors wrap row-major numpy arrays. Each operation records its parents and a
backward closure; calling ``backward()`` on a scalar walks the recorded graph
in reverse topological order and accumulates gradients into every tensor that
needs them. Values are immutable after forward construction, so ops are pure
and safe to call from multiple threads; a single graph stays on one thread.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    DegenerateInputError,
    DimensionError,
)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # arithmetic sugar; the heavy lifting lives in the module-level ops
    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __neg__(self):
        return mul(self, _lift(-1.0))

    def item(self) -> float:
        return float(self.data.reshape(()))

    def backward(self):
        """Reverse accumulation from a scalar output.

        Gradients of parameters not reachable from this node stay None and are
        treated as zero by consumers.
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward() needs a scalar output, got shape {self.data.shape}"
            )
        topo = _toposort(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _toposort(root: Tensor):
    order, visited = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def _needs_grad(t: Tensor) -> bool:
    return t.requires_grad or bool(t._parents)


def _accum(t: Tensor, g: np.ndarray):
    if not _needs_grad(t):
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _make(data: np.ndarray, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if any(_needs_grad(p) for p in parents):
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient down to the shape the operand was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise ops


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bwd():
        _accum(a, _unbroadcast(out.grad, a.data.shape))
        _accum(b, _unbroadcast(out.grad, b.data.shape))

    out = _make(out_data, (a, b), bwd)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def bwd():
        _accum(a, _unbroadcast(out.grad, a.data.shape))
        _accum(b, _unbroadcast(-out.grad, b.data.shape))

    out = _make(out_data, (a, b), bwd)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bwd():
        _accum(a, _unbroadcast(out.grad * b.data, a.data.shape))
        _accum(b, _unbroadcast(out.grad * a.data, b.data.shape))

    out = _make(out_data, (a, b), bwd)
    return out


def div(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data / b.data

    def bwd():
        _accum(a, _unbroadcast(out.grad / b.data, a.data.shape))
        _accum(b, _unbroadcast(-out.grad * a.data / (b.data * b.data), b.data.shape))

    out = _make(out_data, (a, b), bwd)
    return out


def log(a: Tensor) -> Tensor:
    out_data = np.log(a.data)

    def bwd():
        _accum(a, out.grad / a.data)

    out = _make(out_data, (a,), bwd)
    return out


def sqrt(a: Tensor) -> Tensor:
    out_data = np.sqrt(a.data)

    def bwd():
        _accum(a, out.grad * 0.5 / out_data)

    out = _make(out_data, (a,), bwd)
    return out


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values; gradient passes through only where values were in range."""
    out_data = np.clip(a.data, lo, hi)
    mask = (a.data >= lo) & (a.data <= hi)

    def bwd():
        _accum(a, out.grad * mask)

    out = _make(out_data, (a,), bwd)
    return out


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    out_data = a.data * mask

    def bwd():
        _accum(a, out.grad * mask)

    out = _make(out_data, (a,), bwd)
    return out


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bwd():
        _accum(a, out.grad * out_data * (1.0 - out_data))

    out = _make(out_data, (a,), bwd)
    return out


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_data = e / e.sum(axis=-1, keepdims=True)

    def bwd():
        g = out.grad
        inner = (g * out_data).sum(axis=-1, keepdims=True)
        _accum(a, (g - inner) * out_data)

    out = _make(out_data, (a,), bwd)
    return out


# ---------------------------------------------------------------------------
# reductions and reshaping


def sum_all(a: Tensor) -> Tensor:
    out_data = np.asarray(a.data.sum())

    def bwd():
        _accum(a, np.broadcast_to(out.grad, a.data.shape).copy())

    out = _make(out_data, (a,), bwd)
    return out


def sum_axis(a: Tensor, axis: int, keepdims: bool = True) -> Tensor:
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def bwd():
        g = out.grad
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).copy())

    out = _make(out_data, (a,), bwd)
    return out


def reshape(a: Tensor, shape) -> Tensor:
    out_data = a.data.reshape(shape)

    def bwd():
        _accum(a, out.grad.reshape(a.data.shape))

    out = _make(out_data, (a,), bwd)
    return out


def flatten(a: Tensor) -> Tensor:
    """Collapse all axes after the batch axis."""
    n = a.data.shape[0]
    return reshape(a, (n, -1))


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")
    out_data = a.data.T.copy()

    def bwd():
        _accum(a, out.grad.T)

    out = _make(out_data, (a,), bwd)
    return out


def concat(a: Tensor, b: Tensor, axis: int = 1) -> Tensor:
    if a.ndim != b.ndim:
        raise DimensionError(
            f"concat rank mismatch: {a.shape} vs {b.shape}"
        )
    out_data = np.concatenate([a.data, b.data], axis=axis)
    split = a.data.shape[axis]

    def bwd():
        ga, gb = np.split(out.grad, [split], axis=axis)
        _accum(a, ga)
        _accum(b, gb)

    out = _make(out_data, (a, b), bwd)
    return out


# ---------------------------------------------------------------------------
# linear algebra and neural-net primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"matmul shape mismatch: {a.shape} x {b.shape}"
        )
    out_data = a.data @ b.data

    def bwd():
        _accum(a, out.grad @ b.data.T)
        _accum(b, a.data.T @ out.grad)

    out = _make(out_data, (a, b), bwd)
    return out


def dense(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with b broadcast over rows."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise DimensionError(f"dense shape mismatch: {x.shape} x {w.shape}")
    if b.data.shape != (w.shape[1],):
        raise DimensionError(
            f"dense bias shape {b.data.shape} does not match {w.shape[1]} units"
        )
    return add(matmul(x, w), b)


def conv1d(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Valid (no-padding) stride-1 cross-correlation plus bias.

    x: (n, len, c_in), w: (k, c_in, c_out), b: (c_out,).
    """
    if x.ndim != 3 or w.ndim != 3:
        raise DimensionError(f"conv1d expects 3-d x and w, got {x.shape}, {w.shape}")
    n, length, c_in = x.shape
    k, wc_in, c_out = w.shape
    if wc_in != c_in:
        raise DimensionError(
            f"conv1d channel mismatch: input has {c_in}, kernel expects {wc_in}"
        )
    if b.data.shape != (c_out,):
        raise DimensionError(f"conv1d bias shape {b.data.shape} != ({c_out},)")
    if length < k:
        raise DegenerateInputError(
            f"conv1d input length {length} shorter than kernel {k}"
        )
    l_out = length - k + 1
    out_data = np.broadcast_to(b.data, (n, l_out, c_out)).copy()
    for j in range(k):
        out_data += x.data[:, j : j + l_out, :] @ w.data[j]

    def bwd():
        g = out.grad
        _accum(b, g.sum(axis=(0, 1)))
        gw = np.empty_like(w.data)
        gx = np.zeros_like(x.data)
        for j in range(k):
            xs = x.data[:, j : j + l_out, :]
            gw[j] = np.einsum("nti,nto->io", xs, g)
            gx[:, j : j + l_out, :] += g @ w.data[j].T
        _accum(w, gw)
        _accum(x, gx)

    out = _make(out_data, (x, w, b), bwd)
    return out


def maxpool1d(x: Tensor) -> Tensor:
    """Window-2 max pooling; odd trailing element is dropped.

    Gradient routes to the argmax position, first index on ties.
    """
    if x.ndim != 3:
        raise DimensionError(f"maxpool1d expects 3-d input, got {x.shape}")
    n, length, c = x.shape
    if length < 2:
        raise DegenerateInputError(f"maxpool1d input length {length} < window 2")
    l_out = length // 2
    windows = x.data[:, : 2 * l_out, :].reshape(n, l_out, 2, c)
    idx = windows.argmax(axis=2)  # first index wins ties
    out_data = np.take_along_axis(windows, idx[:, :, None, :], axis=2)[:, :, 0, :]

    def bwd():
        gx = np.zeros_like(x.data)
        gwin = gx[:, : 2 * l_out, :].reshape(n, l_out, 2, c)
        np.put_along_axis(gwin, idx[:, :, None, :], out.grad[:, :, None, :], axis=2)
        gx[:, : 2 * l_out, :] = gwin.reshape(n, 2 * l_out, c)
        _accum(x, gx)

    out = _make(out_data, (x,), bwd)
    return out


def dropout(x: Tensor, rate: float, training: bool, rng=None) -> Tensor:
    """Inverted dropout: identity at inference, 1/(1-rate) scaling in training."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    if rng is None:
        raise ConfigError("dropout in training mode needs an explicit rng")
    scale = 1.0 / (1.0 - rate)
    mask = (rng.random(x.data.shape) >= rate) * scale
    out_data = x.data * mask

    def bwd():
        _accum(x, out.grad * mask)

    out = _make(out_data, (x,), bwd)
    return out
