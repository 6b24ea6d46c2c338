"""Minimal dense reverse-mode autodiff over 2-D float64 arrays.

Every op checks its output for NaN/Inf and names itself in the error, so a
diverging training run fails loudly at the op that produced the bad value.
Tape scope is one loss evaluation: build the graph, call backward once,
throw it away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_parents", "_op", "_done")

    def __init__(self, values, requires_grad: bool = False):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise ValueError(f"tensors are 2-D, got shape {arr.shape}")
        self.values = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: list[tuple["Tensor", object]] = []
        self._op = "leaf"
        self._done = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def item(self) -> float:
        if self.values.size != 1:
            raise ValueError("item() needs a single-element tensor")
        return float(self.values.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op!r})"


def constant(values) -> Tensor:
    return Tensor(values, requires_grad=False)


def parameter(values) -> Tensor:
    return Tensor(values, requires_grad=True)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    for axis in (0, 1):
        if shape[axis] == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _make(values: np.ndarray, op: str, parents) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise FloatingPointError(f"non-finite values produced by op {op!r}")
    out = Tensor(values)
    out._op = op
    live = [(p, fn) for p, fn in parents if p.requires_grad or p._parents]
    out._parents = live
    out.requires_grad = bool(live)
    return out


# ---------------------------------------------------------------------------
# primitive ops

def add(a: Tensor, b: Tensor) -> Tensor:
    out = a.values + b.values
    return _make(out, "add", [
        (a, lambda g: _unbroadcast(g, a.shape)),
        (b, lambda g: _unbroadcast(g, b.shape)),
    ])


def sub(a: Tensor, b: Tensor) -> Tensor:
    out = a.values - b.values
    return _make(out, "sub", [
        (a, lambda g: _unbroadcast(g, a.shape)),
        (b, lambda g: _unbroadcast(-g, b.shape)),
    ])


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    out = a.values * b.values
    return _make(out, "hadamard", [
        (a, lambda g: _unbroadcast(g * b.values, a.shape)),
        (b, lambda g: _unbroadcast(g * a.values, b.shape)),
    ])


def divide(a: Tensor, b: Tensor) -> Tensor:
    with np.errstate(all="ignore"):  # _make reports non-finite results
        out = a.values / b.values
    return _make(out, "divide", [
        (a, lambda g: _unbroadcast(g / b.values, a.shape)),
        (b, lambda g: _unbroadcast(-g * a.values / (b.values ** 2), b.shape)),
    ])


def scale(a: Tensor, c: float) -> Tensor:
    return _make(a.values * c, "scale", [(a, lambda g: g * c)])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out = a.values @ b.values
    return _make(out, "matmul", [
        (a, lambda g: g @ b.values.T),
        (b, lambda g: a.values.T @ g),
    ])


def transpose(a: Tensor) -> Tensor:
    return _make(a.values.T.copy(), "transpose", [(a, lambda g: g.T)])


def concat_rows(tensors: list[Tensor]) -> Tensor:
    if not tensors:
        raise ValueError("concat_rows needs at least one tensor")
    out = np.concatenate([t.values for t in tensors], axis=0)
    offsets = np.cumsum([0] + [t.shape[0] for t in tensors])
    parents = [
        (t, (lambda lo, hi: lambda g: g[lo:hi])(offsets[k], offsets[k + 1]))
        for k, t in enumerate(tensors)
    ]
    return _make(out, "concat_rows", parents)


def sum_all(a: Tensor) -> Tensor:
    out = np.array([[a.values.sum()]])
    return _make(out, "sum_all", [(a, lambda g: np.full(a.shape, g[0, 0]))])


def mean_all(a: Tensor) -> Tensor:
    n = a.values.size
    out = np.array([[a.values.mean()]])
    return _make(out, "mean_all", [(a, lambda g: np.full(a.shape, g[0, 0] / n))])


def sum_rows(a: Tensor) -> Tensor:
    out = a.values.sum(axis=1, keepdims=True)
    return _make(out, "sum_rows", [(a, lambda g: np.broadcast_to(g, a.shape).copy())])


def exp(a: Tensor) -> Tensor:
    with np.errstate(all="ignore"):
        out = np.exp(a.values)
    return _make(out, "exp", [(a, lambda g: g * out)])


def log(a: Tensor) -> Tensor:
    with np.errstate(all="ignore"):
        out = np.log(a.values)
    return _make(out, "log", [(a, lambda g: g / a.values)])


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)
    return _make(out, "tanh", [(a, lambda g: g * (1.0 - out ** 2))])


def elu(a: Tensor) -> Tensor:
    out = np.where(a.values > 0, a.values, np.expm1(a.values))
    deriv = np.where(a.values > 0, 1.0, out + 1.0)
    return _make(out, "elu", [(a, lambda g: g * deriv)])


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.values - a.values.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=1, keepdims=True)

    def back(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return out * (g - dot)

    return _make(out, "softmax_rows", [(a, back)])


def row_normalize_l2(a: Tensor) -> Tensor:
    norms = np.linalg.norm(a.values, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot l2-normalize a zero row")
    out = a.values / norms

    def back(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return (g - out * dot) / norms

    return _make(out, "row_normalize_l2", [(a, back)])


# ---------------------------------------------------------------------------
# backward pass

def backward(loss: Tensor) -> None:
    """Populate .grad on every reachable requires_grad tensor; single use."""
    if loss.values.size != 1:
        raise ValueError("backward expects a scalar loss")
    if loss._done:
        raise RuntimeError("backward was already run on this graph")
    loss._done = True

    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._parents:
            stack.append((parent, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad and not node._parents:
            node.grad = g if node.grad is None else node.grad + g
        for parent, fn in node._parents:
            contrib = fn(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contrib
            else:
                grads[key] = contrib
        node._parents = []


def zero_grads(params: list[Tensor]) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# optimizer and init

@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[Tensor], lr: float = 0.001) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros(p.shape) for p in params],
            v=[np.zeros(p.shape) for p in params],
        )


def adam_step(
    params: list[Tensor], state: AdamState, grads: list[np.ndarray] | None = None
) -> None:
    """Standard Adam update with bias correction, in place."""
    if grads is None:
        grads = [p.grad for p in params]
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for k, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros(p.shape)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient in adam_step")
        state.m[k] = b1 * state.m[k] + (1 - b1) * g
        state.v[k] = b2 * state.v[k] + (1 - b2) * g ** 2
        m_hat = state.m[k] / (1 - b1 ** state.t)
        v_hat = state.v[k] / (1 - b2 ** state.t)
        p.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def xavier_init(shape: tuple[int, int], seed) -> Tensor:
    """Uniform Glorot init; ``seed`` is an int or a numpy Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    fan_in, fan_out = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return parameter(rng.uniform(-limit, limit, size=shape))
