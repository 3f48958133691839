"""Reverse-mode differentiation over dense 2-D float64 tensors.

The tape is distributed over the tensors themselves: every operation
records its parents and one vector-Jacobian closure per parent on its
output tensor, forming an acyclic graph.  ``backward`` seeds the scalar
loss with 1, walks the graph once in reverse topological order, and
accumulates gradients into the ``grad`` buffer of every tensor that
requires one.  Calling ``backward`` twice on the same loss is an error;
each forward pass builds a fresh graph.

Every operation checks its output for NaN/Inf and raises immediately,
so numerical corruption surfaces at the op that produced it.

Conventions that matter for exactness:
  - only one broadcast form exists: adding a (1, k) bias row to (n, k);
  - max reductions route gradients to the first index attaining the max;
  - reductions over an empty axis produce zeros (the degenerate readout);
  - ``l2_normalize_rows`` divides by (norm + floor), so an all-zero row
    normalizes to zeros rather than NaN.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "tensor",
    "parameter",
    "backward",
    "zero_grad",
    "grad_check",
    "matmul", "add", "sub", "mul", "div", "smul",
    "relu", "exp", "log", "transpose",
    "concat_rows", "concat_cols", "gather_rows", "scatter_rows",
    "tsum", "tmean", "tmax",
    "l2_normalize_rows", "cosine_similarity_matrix",
]

_FLOOR = 1e-12


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps", "_op",
                 "_backward_ran")

    def __init__(self, data: np.ndarray, requires_grad: bool = False,
                 parents=(), vjps=(), op: str = "leaf"):
        self.data = data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._vjps = vjps
        self._op = op
        self._backward_ran = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"


def _as_matrix(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


def tensor(values, requires_grad: bool = False) -> Tensor:
    """Wrap values as a constant (or trainable) leaf tensor."""
    return Tensor(_as_matrix(values), requires_grad=requires_grad)


def parameter(values) -> Tensor:
    return tensor(np.array(values, dtype=np.float64), requires_grad=True)


def _make(op: str, out: np.ndarray, parents: Sequence[Tensor],
          vjps: Sequence[Callable[[np.ndarray], np.ndarray]]) -> Tensor:
    if out.size and not np.isfinite(out).all():
        raise FloatingPointError(f"op {op!r} produced non-finite values")
    track = any(p.requires_grad for p in parents)
    if not track:
        return Tensor(out, requires_grad=False, op=op)
    return Tensor(out, requires_grad=True, parents=tuple(parents),
                  vjps=tuple(vjps), op=op)


# ------------------------------------------------------------------ arithmetic

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data
    return _make("matmul", out, (a, b),
                 (lambda g: g @ b.data.T, lambda g: a.data.T @ g))


def _binary_shapes(op: str, a: Tensor, b: Tensor) -> bool:
    """True if b is a (1, k) bias row broadcast over a's rows."""
    if a.shape == b.shape:
        return False
    if b.shape == (1, a.shape[1]) and a.shape[0] != 1:
        return True
    raise ValueError(f"{op} shape mismatch: {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    bias = _binary_shapes("add", a, b)
    out = a.data + b.data
    db = (lambda g: g.sum(axis=0, keepdims=True)) if bias else (lambda g: g)
    return _make("add", out, (a, b), (lambda g: g, db))


def sub(a: Tensor, b: Tensor) -> Tensor:
    bias = _binary_shapes("sub", a, b)
    out = a.data - b.data
    db = (lambda g: -g.sum(axis=0, keepdims=True)) if bias else (lambda g: -g)
    return _make("sub", out, (a, b), (lambda g: g, db))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch: {a.shape} vs {b.shape}")
    out = a.data * b.data
    return _make("mul", out, (a, b),
                 (lambda g: g * b.data, lambda g: g * a.data))


def div(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"div shape mismatch: {a.shape} vs {b.shape}")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    return _make("div", out, (a, b),
                 (lambda g: g / b.data,
                  lambda g: -g * a.data / (b.data * b.data)))


def smul(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make("smul", a.data * c, (a,), (lambda g: g * c,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0          # subgradient at 0 is 0
    return _make("relu", a.data * mask, (a,), (lambda g: g * mask,))


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return _make("exp", out, (a,), (lambda g: g * out,))


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return _make("log", out, (a,), (lambda g: g / a.data,))


def transpose(a: Tensor) -> Tensor:
    return _make("transpose", a.data.T.copy(), (a,), (lambda g: g.T,))


# ---------------------------------------------------------------- structure

def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    parts = list(parts)
    if not parts:
        raise ValueError("concat_rows needs at least one tensor")
    widths = {p.shape[1] for p in parts}
    if len(widths) > 1:
        raise ValueError(f"concat_rows width mismatch: {sorted(widths)}")
    out = np.vstack([p.data for p in parts])
    offsets = np.cumsum([0] + [p.shape[0] for p in parts])

    def vjp_for(i):
        return lambda g: g[offsets[i]:offsets[i + 1]]

    return _make("concat_rows", out, parts, tuple(vjp_for(i) for i in range(len(parts))))


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = list(parts)
    if not parts:
        raise ValueError("concat_cols needs at least one tensor")
    heights = {p.shape[0] for p in parts}
    if len(heights) > 1:
        raise ValueError(f"concat_cols height mismatch: {sorted(heights)}")
    out = np.hstack([p.data for p in parts])
    offsets = np.cumsum([0] + [p.shape[1] for p in parts])

    def vjp_for(i):
        return lambda g: g[:, offsets[i]:offsets[i + 1]]

    return _make("concat_cols", out, parts, tuple(vjp_for(i) for i in range(len(parts))))


def gather_rows(a: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise ValueError("gather_rows index must be 1-D")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ValueError(f"gather_rows index out of range for {a.shape[0]} rows")
    out = a.data[idx]

    def vjp(g):
        acc = np.zeros_like(a.data)
        np.add.at(acc, idx, g)
        return acc

    return _make("gather_rows", out, (a,), (vjp,))


def scatter_rows(a: Tensor, idx, n_rows: int) -> Tensor:
    """Accumulate row i of ``a`` into output row idx[i] (duplicates add)."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.shape != (a.shape[0],):
        raise ValueError(f"scatter_rows needs one target per row: {idx.shape} vs {a.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise ValueError(f"scatter_rows target out of range for {n_rows} rows")
    out = np.zeros((n_rows, a.shape[1]))
    np.add.at(out, idx, a.data)
    return _make("scatter_rows", out, (a,), (lambda g: g[idx],))


# ---------------------------------------------------------------- reductions

def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    if axis is None:
        out = np.full((1, 1), a.data.sum())
        vjp = lambda g: np.full_like(a.data, g[0, 0])
    elif axis == 0:
        out = a.data.sum(axis=0, keepdims=True)
        vjp = lambda g: np.broadcast_to(g, a.shape).copy()
    elif axis == 1:
        out = a.data.sum(axis=1, keepdims=True)
        vjp = lambda g: np.broadcast_to(g, a.shape).copy()
    else:
        raise ValueError(f"axis must be None, 0, or 1, got {axis}")
    return _make("tsum", out, (a,), (vjp,))


def tmean(a: Tensor, axis: int | None = None) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    if n == 0:
        # mean over nothing is defined as zero (empty-graph readout)
        shape = (1, 1) if axis is None else ((1, a.shape[1]) if axis == 0 else (a.shape[0], 1))
        return _make("tmean", np.zeros(shape), (a,), (lambda g: np.zeros_like(a.data),))
    return smul(tsum(a, axis=axis), 1.0 / n)


def tmax(a: Tensor, axis: int | None = None) -> Tensor:
    """Max reduction; the gradient routes to the first index attaining the max."""
    if a.data.size == 0:
        shape = (1, 1) if axis is None else ((1, a.shape[1]) if axis == 0 else (a.shape[0], 1))
        return _make("tmax", np.zeros(shape), (a,), (lambda g: np.zeros_like(a.data),))
    if axis is None:
        flat = int(np.argmax(a.data))
        out = np.full((1, 1), a.data.reshape(-1)[flat])

        def vjp(g):
            acc = np.zeros_like(a.data)
            acc.reshape(-1)[flat] = g[0, 0]
            return acc
    elif axis == 0:
        winners = np.argmax(a.data, axis=0)
        out = a.data[winners, np.arange(a.shape[1])].reshape(1, -1)

        def vjp(g):
            acc = np.zeros_like(a.data)
            acc[winners, np.arange(a.shape[1])] = g[0]
            return acc
    elif axis == 1:
        winners = np.argmax(a.data, axis=1)
        out = a.data[np.arange(a.shape[0]), winners].reshape(-1, 1)

        def vjp(g):
            acc = np.zeros_like(a.data)
            acc[np.arange(a.shape[0]), winners] = g[:, 0]
            return acc
    else:
        raise ValueError(f"axis must be None, 0, or 1, got {axis}")
    return _make("tmax", out, (a,), (vjp,))


# ------------------------------------------------------------- normalization

def l2_normalize_rows(a: Tensor, floor: float = _FLOOR) -> Tensor:
    """Rows divided by (their L2 norm + floor); zero rows map to zeros."""
    norms = np.linalg.norm(a.data, axis=1, keepdims=True)
    denom = norms + floor
    out = a.data / denom

    def vjp(g):
        dots = (g * a.data).sum(axis=1, keepdims=True)
        safe = np.where(norms > 0, norms, 1.0)
        return g / denom - a.data * dots / (safe * denom * denom)

    return _make("l2_normalize_rows", out, (a,), (vjp,))


def cosine_similarity_matrix(a: Tensor, b: Tensor) -> Tensor:
    """All-pairs cosine similarity: rows of ``a`` against rows of ``b``.

    Computed as normalized-rows product, so zero rows yield similarity 0.
    """
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"cosine width mismatch: {a.shape} vs {b.shape}")
    return matmul(l2_normalize_rows(a), transpose(l2_normalize_rows(b)))


# ------------------------------------------------------------------ backward

def _topo_order(root: Tensor) -> list[Tensor]:
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
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Populate ``grad`` on every tensor reachable from ``loss`` that
    requires one.  Gradients accumulate across separate losses; use
    ``zero_grad`` between optimization steps."""
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._backward_ran:
        raise RuntimeError("backward already ran for this loss; build a fresh "
                           "forward pass before differentiating again")
    loss._backward_ran = True
    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for node in reversed(_topo_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.requires_grad and not node._parents:
            node.grad = g if node.grad is None else node.grad + g
        for parent, vjp in zip(node._parents, node._vjps):
            if not parent.requires_grad:
                continue
            contribution = vjp(g)
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + contribution
            else:
                grads[key] = contribution


def zero_grad(params: Iterable[Tensor]) -> None:
    for p in params:
        p.grad = None


# ------------------------------------------------------------- verification

def grad_check(fn: Callable[[], Tensor], params: Sequence[Tensor],
               epsilon: float = 1e-5) -> float:
    """Max relative disagreement between analytic and central-difference
    gradients of a scalar function of ``params``.

    Relative error per coordinate is |analytic - numeric| divided by
    (max(|analytic|, |numeric|) + 1e-8).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    zero_grad(params)
    loss = fn()
    backward(loss)
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + epsilon
            up = fn().item()
            flat[i] = keep - epsilon
            down = fn().item()
            flat[i] = keep
            numeric = (up - down) / (2.0 * epsilon)
            a = ana.reshape(-1)[i]
            err = abs(a - numeric) / (max(abs(a), abs(numeric)) + 1e-8)
            worst = max(worst, err)
    zero_grad(params)
    return worst
