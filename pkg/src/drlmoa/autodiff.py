"""A small reverse-mode autodiff engine over float64 numpy arrays.

Operations record onto the innermost active :class:`Graph` whenever one of
their inputs requires a gradient. Outside a graph nothing is recorded, which
is how inference runs. Leading batch dimensions are allowed everywhere;
``add``/``sub``/``mul`` broadcast like numpy.

Usage::

    with Graph() as g:
        loss = ...
    g.backward(loss)      # accumulates into every leaf's .grad
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, TrainingError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_leaf")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.name = name
        self._leaf = True

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self):
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return scale(self, -1.0)


@dataclass
class _Node:
    out: Tensor
    inputs: tuple
    backward: Callable


_ACTIVE: list["Graph"] = []


class Graph:
    """Tape of primitive applications in execution (= topological) order."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self):
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def backward(self, loss: Tensor):
        backward(self, loss)


def backward(graph: Graph, loss: Tensor):
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf reached."""
    if loss.data.size != 1:
        raise DomainError(f"backward needs a scalar loss, got shape {loss.shape}")
    adj = {id(loss): np.ones_like(loss.data)}
    leaves = {}
    if loss._leaf and loss.requires_grad:
        leaves[id(loss)] = loss
    for node in reversed(graph.nodes):
        g = adj.pop(id(node.out), None)
        if g is None:
            continue
        grads = node.backward(g)
        for inp, gi in zip(node.inputs, grads):
            if gi is None or not isinstance(inp, Tensor) or not inp.requires_grad:
                continue
            key = id(inp)
            if key in adj:
                adj[key] = adj[key] + gi
            else:
                adj[key] = gi
            if inp._leaf:
                leaves[key] = inp
    for key, t in leaves.items():
        g = adj.get(key)
        if g is not None:
            t.grad = t.grad + g


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _record(data: np.ndarray, inputs: Sequence, fn: Callable) -> Tensor:
    out = Tensor(data)
    if _ACTIVE and any(isinstance(t, Tensor) and t.requires_grad for t in inputs):
        out.requires_grad = True
        out._leaf = False
        _ACTIVE[-1].nodes.append(_Node(out, tuple(inputs), fn))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# elementwise ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    return _record(a.data + b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    return _record(a.data - b.data, (a, b),
                   lambda g: (_unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    return _record(a.data * b.data, (a, b),
                   lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def scale(a: Tensor, c: float) -> Tensor:
    return _record(a.data * c, (a,), lambda g: (g * c,))


def square(a: Tensor) -> Tensor:
    return _record(a.data * a.data, (a,), lambda g: (2.0 * a.data * g,))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _record(y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid(a.data)
    return _record(y, (a,), lambda g: (g * y * (1.0 - y),))


def relu(a: Tensor) -> Tensor:
    pos = a.data > 0
    return _record(np.where(pos, a.data, 0.0), (a,), lambda g: (g * pos,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


# reductions and indexing ---------------------------------------------------

def sum(a: Tensor, axis=None) -> Tensor:  # noqa: A001 - mirrors numpy
    def back(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), a.shape).copy(),)

    return _record(np.asarray(a.data.sum(axis=axis)), (a,), back)


def mean(a: Tensor) -> Tensor:
    return scale(sum(a), 1.0 / a.data.size)


def reshape(a: Tensor, shape) -> Tensor:
    return _record(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def inner(x: Tensor, v: Tensor) -> Tensor:
    """Contract the last axis of ``x`` with the vector ``v``."""
    if x.shape[-1] != v.shape[0] or v.data.ndim != 1:
        raise DomainError(f"inner: cannot contract {x.shape} with {v.shape}")

    def back(g):
        gx = g[..., None] * v.data
        gv = (g[..., None] * x.data).reshape(-1, v.shape[0]).sum(axis=0)
        return gx, gv

    return _record(x.data @ v.data, (x, v), back)


def pick(x: Tensor, idx) -> Tensor:
    """``x[b, idx[b]]`` for a (B, n) tensor."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(x.shape[0])

    def back(g):
        gx = np.zeros_like(x.data)
        gx[rows, idx] = g
        return (gx,)

    return _record(x.data[rows, idx], (x,), back)


def gather_rows(e: Tensor, idx) -> Tensor:
    """``e[b, idx[b], :]`` for a (B, n, d) tensor."""
    idx = np.asarray(idx, dtype=np.int64)
    rows = np.arange(e.shape[0])

    def back(g):
        ge = np.zeros_like(e.data)
        ge[rows, idx] = g
        return (ge,)

    return _record(e.data[rows, idx], (e,), back)


# neural primitives ---------------------------------------------------------

def linear(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ W.T + b`` applied over the last axis of ``x``."""
    if x.shape[-1] != W.shape[1]:
        raise DomainError(f"linear: input width {x.shape[-1]} does not match weight {W.shape}")
    if b is not None and b.shape != (W.shape[0],):
        raise DomainError(f"linear: bias shape {b.shape} does not match weight {W.shape}")
    y = x.data @ W.data.T
    if b is not None:
        y = y + b.data

    def back(g):
        g2 = g.reshape(-1, W.shape[0])
        gx = g @ W.data
        gW = g2.T @ x.data.reshape(-1, W.shape[1])
        if b is None:
            return gx, gW
        return gx, gW, g2.sum(axis=0)

    inputs = (x, W) if b is None else (x, W, b)
    return _record(y, inputs, back)


def embed_cities(W: Tensor, b: Tensor, features) -> Tensor:
    """Per-city affine map (kernel-size-1 convolution): row i is ``W @ features[i] + b``."""
    return linear(_wrap(features), W, b)


GRU_KEYS = ("W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h")


def gru_cell(params: dict, x: Tensor, h: Tensor) -> Tensor:
    """One GRU step, ``h' = (1 - z) * h + z * h_tilde``.

    ``params`` maps the names in ``GRU_KEYS`` to tensors: ``W_*`` are
    (d_h, d_in), ``U_*`` are (d_h, d_h) and ``b_*`` are (d_h,).
    """
    x, h = _wrap(x), _wrap(h)
    W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h = (params[k] for k in GRU_KEYS)
    d_h = U_z.shape[0]
    if h.shape[-1] != d_h or x.shape[-1] != W_z.shape[1] or x.shape[:-1] != h.shape[:-1]:
        raise DomainError(f"gru_cell: shapes x={x.shape}, h={h.shape} do not fit d_h={d_h}")
    xd, hd = x.data, h.data
    z = _sigmoid(xd @ W_z.data.T + hd @ U_z.data.T + b_z.data)
    r = _sigmoid(xd @ W_r.data.T + hd @ U_r.data.T + b_r.data)
    rh = r * hd
    hc = np.tanh(xd @ W_h.data.T + rh @ U_h.data.T + b_h.data)
    out = (1.0 - z) * hd + z * hc

    def back(g):
        flat_x = xd.reshape(-1, xd.shape[-1])
        flat_h = hd.reshape(-1, d_h)
        flat = lambda a: a.reshape(-1, d_h)  # noqa: E731
        dh = g * (1.0 - z)
        dah = g * z * (1.0 - hc * hc)
        daz = g * (hc - hd) * z * (1.0 - z)
        drh = dah @ U_h.data
        dh = dh + drh * r
        dar = drh * hd * r * (1.0 - r)
        dx = dah @ W_h.data + dar @ W_r.data + daz @ W_z.data
        dh = dh + dar @ U_r.data + daz @ U_z.data
        return (
            dx,
            dh,
            flat(daz).T @ flat_x,
            flat(dar).T @ flat_x,
            flat(dah).T @ flat_x,
            flat(daz).T @ flat_h,
            flat(dar).T @ flat_h,
            flat(dah).T @ rh.reshape(-1, d_h),
            flat(daz).sum(axis=0),
            flat(dar).sum(axis=0),
            flat(dah).sum(axis=0),
        )

    return _record(out, (x, h, W_z, W_r, W_h, U_z, U_r, U_h, b_z, b_r, b_h), back)


def _check_mask(u: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return np.zeros(u.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != u.shape:
        raise DomainError(f"mask shape {mask.shape} does not match scores {u.shape}")
    if np.any(np.all(mask, axis=-1)):
        raise DomainError("softmax over an all-masked row")
    return mask


def _masked_shift(u: np.ndarray, mask: np.ndarray) -> np.ndarray:
    s = np.where(mask, -np.inf, u)
    return s - s.max(axis=-1, keepdims=True)


def softmax(u, mask=None) -> Tensor:
    """Softmax over the last axis; entries where ``mask`` is True get exactly 0."""
    u = _wrap(u)
    mask = _check_mask(u.data, mask)
    e = np.exp(_masked_shift(u.data, mask))
    p = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (p * (g - np.sum(g * p, axis=-1, keepdims=True)),)

    return _record(p, (u,), back)


def log_softmax(u, mask=None) -> Tensor:
    """Log of :func:`softmax`; masked entries are ``-inf`` and receive no gradient."""
    u = _wrap(u)
    mask = _check_mask(u.data, mask)
    s = _masked_shift(u.data, mask)
    lse = np.log(np.exp(s).sum(axis=-1, keepdims=True))
    out = s - lse
    p = np.exp(out)

    def back(g):
        g = np.where(mask, 0.0, g)
        return (g - p * g.sum(axis=-1, keepdims=True),)

    return _record(out, (u,), back)


# initialisation and optimisation ------------------------------------------

def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def xavier_init(rng: np.random.Generator, shape, name: str = "") -> Tensor:
    """Glorot-uniform weights. A 1-D shape is treated as a single row vector."""
    shape = tuple(int(s) for s in shape)
    if not shape:
        raise DomainError("xavier_init needs at least one dimension")
    if len(shape) == 1:
        fan_in, fan_out = shape[0], 1
    else:
        receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
        fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True, name=name)


def zeros(shape, name: str = "") -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state: AdamState, params: Sequence[Tensor], grads: Sequence[np.ndarray] | None = None):
    """One bias-corrected Adam update, in place. ``grads`` defaults to each ``p.grad``."""
    if grads is None:
        grads = [p.grad for p in params]
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(state.m) != len(params):
        raise DomainError("Adam state does not match the parameter list")
    for p, g, m in zip(params, grads, state.m):
        if g.shape != p.shape or m.shape != p.shape:
            raise DomainError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {p.name or '?'} at Adam step {state.t + 1}")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def clip_grad_norm(params: Iterable[Tensor], max_norm: float) -> float:
    """Rescale gradients in place so their global L2 norm is at most ``max_norm``."""
    params = list(params)
    total = float(np.sqrt(np.sum([np.sum(p.grad * p.grad) for p in params])))
    if total > max_norm > 0:
        for p in params:
            p.grad = p.grad * (max_norm / total)
    return total


def numerical_grad(f: Callable[[], float], t: Tensor, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f()`` w.r.t. ``t.data``."""
    out = np.zeros_like(t.data)
    flat = t.data.reshape(-1)
    gflat = out.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f()
        flat[i] = orig - step
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return out
