"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a numpy array and, when an operation involves at least
one input with ``requires_grad``, records itself as a node of a dynamic
computation graph (op identifier, parent references, backward rule).
Calling :meth:`Tensor.backward` on a scalar node walks the graph in
reverse topological order and accumulates gradients into every reachable
leaf.  Gradients are always accumulated in float64; leaf data may be
stored in float32 (model weights) or float64 (activations, inputs).

Graphs are rebuilt on every forward pass, which is what the few-step
test-time fine-tuning loop needs; nothing is retained between passes.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import (
    ContractError,
    DegenerateBatchError,
    DimensionError,
    DomainError,
    NumericError,
)

__all__ = [
    "Tensor",
    "forward_op",
    "gradients",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "conv2d",
    "relu",
    "batchnorm",
    "mean",
    "tsum",
    "log",
    "exp",
    "softmax",
    "clip_min",
    "reshape",
]

BN_EPS = 1e-5


class Tensor:
    """A node in the computation graph holding data and (optionally) a gradient."""

    __slots__ = ("data", "requires_grad", "grad", "op", "parents", "_backward",
                 "batch_mean", "batch_var")

    def __init__(self, data, requires_grad: bool = False, dtype=None,
                 op: str | None = None, parents: tuple = ()):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self.op = op
        self.parents = parents
        self._backward: Callable[[np.ndarray], None] | None = None
        # populated by batchnorm in train-stats mode, None otherwise
        self.batch_mean: np.ndarray | None = None
        self.batch_var: np.ndarray | None = None
        if op is None and not np.all(np.isfinite(arr)):
            raise NumericError("tensor data contains NaN or Inf")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros(self.data.shape, dtype=np.float64)
        self.grad += g

    def backward(self) -> None:
        """Reverse-mode sweep from a scalar node; fills ``grad`` on leaves."""
        if self.data.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {self.data.shape}")
        order = _toposort(self)
        self.grad = np.ones(self.data.shape, dtype=np.float64)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar; scalars become constant tensors
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, _coerce(other))

    def __repr__(self) -> str:
        tag = f", op={self.op!r}" if self.op else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"


def _coerce(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float64))


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _make(data: np.ndarray, op: str, inputs: Sequence[Tensor],
          backward: Callable[[np.ndarray], None] | None) -> Tensor:
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires, op=op,
                 parents=tuple(inputs) if requires else ())
    if requires:
        out._backward = backward
    return out


# --- elementwise arithmetic -------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g, b.shape))

    return _make(data, "add", (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g, b.shape))

    return _make(data, "sub", (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(g * a.data, b.shape))

    return _make(data, "mul", (a, b), backward)


def div(a: Tensor, b: Tensor) -> Tensor:
    data = a.data / b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(data, "div", (a, b), backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        a.accumulate_grad(-g)

    return _make(-a.data, "neg", (a,), backward)


# --- matrix / convolution ---------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise DimensionError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.data.shape} @ {b.data.shape}")
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T.astype(np.float64))
        if b.requires_grad:
            b.accumulate_grad(a.data.T.astype(np.float64) @ g)

    return _make(data, "matmul", (a, b), backward)


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int,
            ho: int, wo: int) -> np.ndarray:
    """[N,C,Hp,Wp] -> [N*ho*wo, C*kh*kw] patch matrix (one copy)."""
    n, c = xp.shape[:2]
    sn, sc, sh, sw = xp.strides
    windows = np.lib.stride_tricks.as_strided(
        xp, shape=(n, c, kh, kw, ho, wo),
        strides=(sn, sc, sh, sw, sh * stride, sw * stride), writeable=False)
    return np.ascontiguousarray(windows.transpose(0, 4, 5, 1, 2, 3)
                                ).reshape(n * ho * wo, c * kh * kw)


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """2-D cross-correlation of x[N,C,H,W] with w[O,C,kh,kw], zero padding."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise DimensionError("conv2d expects x[N,C,H,W] and w[O,C,kh,kw]")
    n, c, h, wd = x.data.shape
    o, cw, kh, kw = w.data.shape
    if c != cw:
        raise DimensionError(f"conv2d channel mismatch: input {c}, kernel {cw}")
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise DimensionError("conv2d output would be empty")

    xp = x.data.astype(np.float64, copy=False)
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cols = _im2col(xp, kh, kw, stride, ho, wo)
    w_mat = w.data.reshape(o, c * kh * kw).astype(np.float64, copy=False)
    out = (cols @ w_mat.T).reshape(n, ho, wo, o).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b.data.reshape(1, o, 1, 1)

    inputs = (x, w) if b is None else (x, w, b)

    def backward(g):
        g_cols = np.ascontiguousarray(g.transpose(0, 2, 3, 1)).reshape(n * ho * wo, o)
        if b is not None and b.requires_grad:
            b.accumulate_grad(g.sum(axis=(0, 2, 3)))
        if w.requires_grad:
            w.accumulate_grad((g_cols.T @ cols).reshape(o, c, kh, kw))
        if x.requires_grad:
            gcols = (g_cols @ w_mat).reshape(n, ho, wo, c, kh, kw)
            gxp = np.zeros((n, c, h + 2 * padding, wd + 2 * padding), dtype=np.float64)
            # scatter-add each kernel tap back onto the padded canvas
            for u in range(kh):
                for v in range(kw):
                    gxp[:, :, u:u + stride * ho:stride, v:v + stride * wo:stride] += \
                        gcols[:, :, :, :, u, v].transpose(0, 3, 1, 2)
            if padding:
                gxp = gxp[:, :, padding:-padding, padding:-padding]
            x.accumulate_grad(gxp)

    return _make(out, "conv2d", inputs, backward)


# --- nonlinearities and normalization ----------------------------------------

def relu(x: Tensor) -> Tensor:
    data = np.maximum(x.data, 0)

    def backward(g):
        x.accumulate_grad(g * (x.data > 0))

    return _make(data, "relu", (x,), backward)


def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor, mode: str = "train-stats",
              running_mean: np.ndarray | None = None,
              running_var: np.ndarray | None = None,
              eps: float = BN_EPS) -> Tensor:
    """Channel-wise normalization of x[N,C,H,W].

    ``train-stats`` normalizes with statistics of the current batch (the
    mode used while adapting to a test batch); ``running-stats`` uses the
    stored running estimates (plain evaluation).  The batch statistics are
    attached to the output as ``batch_mean`` / ``batch_var`` so callers can
    maintain running buffers.
    """
    if x.data.ndim != 4:
        raise DimensionError("batchnorm expects x[N,C,H,W]")
    n, c, h, w = x.data.shape
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise DimensionError("batchnorm gamma/beta must have shape [C]")

    if mode == "train-stats":
        if n < 2:
            raise DegenerateBatchError(
                "train-stats batchnorm needs a batch of at least 2")
        mu = x.data.mean(axis=(0, 2, 3), dtype=np.float64)
        var = x.data.var(axis=(0, 2, 3), dtype=np.float64)
    elif mode == "running-stats":
        if running_mean is None or running_var is None:
            raise ContractError("running-stats mode requires running buffers")
        mu = np.asarray(running_mean, dtype=np.float64)
        var = np.asarray(running_var, dtype=np.float64)
    else:
        raise ContractError(f"unknown batchnorm mode {mode!r}")

    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(1, c, 1, 1)) * inv.reshape(1, c, 1, 1)
    data = gamma.data.reshape(1, c, 1, 1) * xhat + beta.data.reshape(1, c, 1, 1)

    def backward(g):
        if beta.requires_grad:
            beta.accumulate_grad(g.sum(axis=(0, 2, 3)))
        if gamma.requires_grad:
            gamma.accumulate_grad((g * xhat).sum(axis=(0, 2, 3)))
        if x.requires_grad:
            gi = gamma.data.reshape(1, c, 1, 1) * inv.reshape(1, c, 1, 1)
            if mode == "running-stats":
                x.accumulate_grad(g * gi)
            else:
                m = n * h * w
                gsum = g.sum(axis=(0, 2, 3), keepdims=True)
                gx_sum = (g * xhat).sum(axis=(0, 2, 3), keepdims=True)
                x.accumulate_grad(gi * (g - gsum / m - xhat * gx_sum / m))

    out = _make(data, "batchnorm", (x, gamma, beta), backward)
    if mode == "train-stats":
        out.batch_mean = mu
        out.batch_var = var
    return out


# --- reductions / pointwise transcendentals ----------------------------------

def _axis_tuple(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        return (axis % ndim,)
    return tuple(a % ndim for a in axis)


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = x.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64)
    axes = _axis_tuple(axis, x.data.ndim)

    def backward(g):
        gg = g
        if not keepdims:
            for a in sorted(axes):
                gg = np.expand_dims(gg, a)
        x.accumulate_grad(np.broadcast_to(gg, x.data.shape).astype(np.float64, copy=True))

    return _make(data, "sum", (x,), backward)


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axis_tuple(axis, x.data.ndim)
    count = 1
    for a in axes:
        count *= x.data.shape[a]
    data = x.data.mean(axis=axis, keepdims=keepdims, dtype=np.float64)

    def backward(g):
        gg = g
        if not keepdims:
            for a in sorted(axes):
                gg = np.expand_dims(gg, a)
        x.accumulate_grad(np.broadcast_to(gg / count, x.data.shape).astype(np.float64, copy=True))

    return _make(data, "mean", (x,), backward)


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise DomainError("log requires strictly positive input")
    data = np.log(x.data)

    def backward(g):
        x.accumulate_grad(g / x.data)

    return _make(data, "log", (x,), backward)


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)

    def backward(g):
        x.accumulate_grad(g * data)

    return _make(data, "exp", (x,), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    data = e / e.sum(axis=axis, keepdims=True, dtype=np.float64)

    def backward(g):
        dot = (g * data).sum(axis=axis, keepdims=True)
        x.accumulate_grad(data * (g - dot))

    return _make(data, "softmax", (x,), backward)


def clip_min(x: Tensor, floor: float) -> Tensor:
    """max(x, floor); gradient passes wherever x was not clipped."""
    data = np.maximum(x.data, floor)

    def backward(g):
        x.accumulate_grad(g * (x.data >= floor))

    return _make(data, "clip_min", (x,), backward)


def reshape(x: Tensor, shape) -> Tensor:
    data = x.data.reshape(shape)

    def backward(g):
        x.accumulate_grad(g.reshape(x.data.shape))

    return _make(data, "reshape", (x,), backward)


# --- op registry and graph-level helpers -------------------------------------

OPS: dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "neg": neg,
    "matmul": matmul,
    "conv2d": conv2d,
    "relu": relu,
    "batchnorm": batchnorm,
    "mean": mean,
    "sum": tsum,
    "log": log,
    "exp": exp,
    "softmax": softmax,
    "clip_min": clip_min,
    "reshape": reshape,
}


def forward_op(op: str, *inputs, **kwargs) -> Tensor:
    """Dispatch an operation by identifier (the table above)."""
    try:
        fn = OPS[op]
    except KeyError:
        raise ContractError(f"unknown op identifier {op!r}") from None
    return fn(*inputs, **kwargs)


def gradients(loss: Tensor, params: Mapping[str, Tensor]) -> dict[str, np.ndarray]:
    """Backward from a scalar loss; return float64 grads keyed like `params`.

    Leaves that the loss does not reach get zero gradients.
    """
    for p in params.values():
        p.zero_grad()
    loss.backward()
    out: dict[str, np.ndarray] = {}
    for name, p in params.items():
        if p.grad is None:
            out[name] = np.zeros(p.data.shape, dtype=np.float64)
        else:
            out[name] = p.grad
    return out
