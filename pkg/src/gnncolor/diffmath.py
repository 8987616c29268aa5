"""Small dense-matrix reverse-mode autodiff engine.

Every value is a 2-D float64 ``Tensor`` recorded on a ``Tape`` in creation
order, so a reverse sweep over ``tape.nodes`` is a valid topological order.
Only the operations the coloring model and its loss need are provided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
import scipy.sparse as sp

from .graph import Graph


class NonFiniteError(FloatingPointError):
    """A NaN or infinity appeared in a forward value or a gradient."""


BackwardFn = Callable[[np.ndarray], tuple]


class Tensor:
    __slots__ = ("data", "grad", "tape", "parents", "backward_fn", "requires_grad", "name", "op")

    def __init__(self, data, tape, parents=(), backward_fn=None, requires_grad=False, name=None, op="leaf"):
        self.data = data
        self.grad = None
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad
        self.name = name
        self.op = op

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        return float(self.data[0, 0])

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.shape}, name={self.name})"


def _as_matrix(x) -> np.ndarray:
    arr = np.array(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    elif arr.ndim != 2:
        raise ValueError(f"tensors are 2-D, got shape {arr.shape}")
    return arr


def _check_finite(arr: np.ndarray, what: str) -> None:
    # cheap test first; an overflowing sum of finite entries falls through to the exact check
    with np.errstate(over="ignore", invalid="ignore"):
        total = np.add.reduce(arr, axis=None)
    if not math.isfinite(total) and not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite value in {what}")


class Tape:
    """Append-only record of the computation."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def param(self, data, name: str | None = None) -> Tensor:
        """Leaf whose gradient is reported by :func:`backward`."""
        arr = _as_matrix(data)
        _check_finite(arr, f"parameter {name}")
        t = Tensor(arr, self, requires_grad=True, name=name)
        self.nodes.append(t)
        return t

    def constant(self, data, name: str | None = None) -> Tensor:
        arr = _as_matrix(data)
        _check_finite(arr, f"constant {name}")
        t = Tensor(arr, self, name=name)
        self.nodes.append(t)
        return t

    def _record(self, data: np.ndarray, parents: tuple, backward_fn: BackwardFn, op: str) -> Tensor:
        _check_finite(data, op)
        t = Tensor(
            data,
            self,
            parents=parents,
            backward_fn=backward_fn,
            requires_grad=any(p.requires_grad for p in parents),
            op=op,
        )
        self.nodes.append(t)
        return t


def _tape_of(*xs: Tensor) -> Tape:
    tape = xs[0].tape
    for x in xs[1:]:
        if x.tape is not tape:
            raise ValueError("tensors belong to different tapes")
    return tape


@dataclass(frozen=True)
class AggregationPlan:
    """Neighbor lists and ``1/|N(v)|`` factors for mean aggregation.

    Isolated nodes get scale 0, so their aggregate is the zero row.
    """

    neighbors: tuple[np.ndarray, ...]
    scale: np.ndarray
    mean_op: sp.csr_matrix
    mean_op_t: sp.csr_matrix

    @classmethod
    def from_graph(cls, g: Graph) -> "AggregationPlan":
        deg = np.asarray(g.degrees, dtype=np.float64)
        scale = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        e = g.edge_array()
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        vals = scale[rows]
        m = sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
        neighbors = tuple(np.asarray(a, dtype=np.int64) for a in g.adjacency)
        return cls(neighbors, scale, m, m.T.tocsr())

    @property
    def n(self) -> int:
        return len(self.neighbors)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    A, B = a.data, b.data
    need_a, need_b = a.requires_grad, b.requires_grad

    def back(g):
        return (g @ B.T if need_a else None), (A.T @ g if need_b else None)

    return _tape_of(a, b)._record(A @ B, (a, b), back, "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"add shape mismatch {a.shape} + {b.shape}")
    return _tape_of(a, b)._record(a.data + b.data, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch {a.shape} - {b.shape}")
    return _tape_of(a, b)._record(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product; a 1x1 operand broadcasts as a scalar."""
    A, B = a.data, b.data
    if a.shape == b.shape:

        def back(g):
            return g * B, g * A

    elif b.shape == (1, 1):

        def back(g):
            return g * B, np.array([[np.sum(g * A)]])

    elif a.shape == (1, 1):

        def back(g):
            return np.array([[np.sum(g * B)]]), g * A

    else:
        raise ValueError(f"mul shape mismatch {a.shape} * {b.shape}")
    return _tape_of(a, b)._record(A * B, (a, b), back, "mul")


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a fixed constant."""
    return x.tape._record(x.data * c, (x,), lambda g: (g * c,), "scale")


def absolute(x: Tensor) -> Tensor:
    X = x.data
    sign = np.sign(X)
    return x.tape._record(np.abs(X), (x,), lambda g: (g * sign,), "abs")


def sum_all(x: Tensor) -> Tensor:
    shape = x.shape
    return x.tape._record(
        np.array([[x.data.sum()]]), (x,), lambda g: (np.full(shape, g[0, 0]),), "sum"
    )


def log(x: Tensor, eps: float = 0.0) -> Tensor:
    """Elementwise ``log(x + eps)``."""
    shifted = x.data + eps
    if np.any(shifted <= 0):
        raise NonFiniteError("log of non-positive value")
    return x.tape._record(np.log(shifted), (x,), lambda g: (g / shifted,), "log")


def neighbor_mean(plan: AggregationPlan, h: Tensor) -> Tensor:
    """Row ``v`` of the result is the mean of ``h`` over the neighbors of ``v``."""
    if h.rows != plan.n:
        raise ValueError(f"plan has {plan.n} nodes, tensor has {h.rows} rows")
    out = np.asarray(plan.mean_op @ h.data)
    return h.tape._record(
        out, (h,), lambda g: (np.asarray(plan.mean_op_t @ g),), "neighbor_mean"
    )


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    if not 0.0 <= slope <= 1.0:
        raise ValueError(f"slope must lie in [0, 1], got {slope}")
    X = x.data
    factor = np.where(X > 0, 1.0, slope)
    return x.tape._record(X * factor, (x,), lambda g: (g * factor,), "leaky_relu")


def row_softmax(x: Tensor) -> Tensor:
    if x.cols < 1:
        raise ValueError("softmax needs at least one column")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)

    def back(g):
        return (p * (g - np.sum(g * p, axis=1, keepdims=True)),)

    return x.tape._record(p, (x,), back, "row_softmax")


def dropout(x: Tensor, p: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout: survivors are scaled by ``1/(1-p)`` at train time."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x.tape._record(x.data * mask, (x,), lambda g: (g * mask,), "dropout")


def edge_dot_sum(edges: np.ndarray, x: Tensor) -> Tensor:
    """``sum over (u, v) in edges of x[u] . x[v]`` as a 1x1 tensor."""
    X = x.data
    if len(edges) == 0:
        return x.tape._record(np.zeros((1, 1)), (x,), lambda g: (np.zeros_like(X),), "edge_dot_sum")
    if edges.max() >= x.rows:
        raise ValueError("edge index outside tensor rows")
    u, v = edges[:, 0], edges[:, 1]
    value = np.einsum("ij,ij->", X[u], X[v])

    def back(g):
        gx = np.zeros_like(X)
        np.add.at(gx, u, X[v])
        np.add.at(gx, v, X[u])
        return (gx * g[0, 0],)

    return x.tape._record(np.array([[value]]), (x,), back, "edge_dot_sum")


def backward(tape: Tape, loss: Tensor) -> dict[str, np.ndarray]:
    """Reverse sweep; returns gradients of named parameters.

    Unnamed parameters still receive ``.grad`` but are keyed by ``id`` order
    (``"param<i>"``) in the returned mapping.
    """
    if loss.tape is not tape:
        raise ValueError("loss is not on this tape")
    if loss.shape != (1, 1):
        raise ValueError(f"loss must be 1x1, got {loss.shape}")
    for node in tape.nodes:
        node.grad = None
    loss.grad = np.ones((1, 1))
    for node in reversed(tape.nodes):
        if node.grad is None or node.backward_fn is None:
            continue
        for parent, g in zip(node.parents, node.backward_fn(node.grad)):
            if g is None or not parent.requires_grad:
                continue
            parent.grad = g if parent.grad is None else parent.grad + g
    grads: dict[str, np.ndarray] = {}
    i = 0
    for node in tape.nodes:
        if node.requires_grad and node.parents == ():
            g = node.grad if node.grad is not None else np.zeros_like(node.data)
            _check_finite(g, f"gradient of {node.name}")
            key = node.name if node.name is not None else f"param{i}"
            grads[key] = g
            i += 1
    return grads


# ---------------------------------------------------------------- gradient checks


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    max_abs_error: float
    passed: bool


def numerical_gradient(f: Callable[[], float], x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``f`` w.r.t. ``x`` (perturbed in place, restored)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        fp = f()
        x[idx] = orig - step
        fm = f()
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * step)
    return grad


def compare_gradients(analytic: np.ndarray, numeric: np.ndarray, rel_tol=1e-4, abs_tol=1e-7):
    """Max relative error, max absolute error, pass flag.

    An entry passes if its relative error is within ``rel_tol`` or its
    absolute error within ``abs_tol``. The reported relative error ignores
    entries where both values are below ``abs_tol`` in magnitude.
    """
    diff = np.abs(analytic - numeric)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    rel = np.divide(diff, denom, out=np.zeros_like(diff), where=denom > abs_tol)
    ok = bool(np.all((rel <= rel_tol) | (diff <= abs_tol)))
    max_rel = float(rel.max()) if rel.size else 0.0
    max_abs = float(diff.max()) if diff.size else 0.0
    return max_rel, max_abs, ok


def gradcheck(
    name: str,
    build: Callable[[Tape, Mapping[str, Tensor]], Tensor],
    inputs: Mapping[str, np.ndarray],
    step: float = 1e-5,
    rel_tol: float = 1e-4,
    abs_tol: float = 1e-7,
) -> GradCheckResult:
    """Check ``backward`` against central differences.

    ``build(tape, leaves)`` must construct a scalar loss from the parameter
    leaves; it is re-run for every perturbation, so it must be deterministic.
    """
    arrays = {k: _as_matrix(v) for k, v in inputs.items()}

    def run():
        tape = Tape()
        leaves = {k: tape.param(v, name=k) for k, v in arrays.items()}
        return tape, build(tape, leaves)

    tape, loss = run()
    analytic = backward(tape, loss)
    worst_rel = worst_abs = 0.0
    ok = True
    for k, arr in arrays.items():
        numeric = numerical_gradient(lambda: run()[1].item(), arr, step)
        rel, ab, passed = compare_gradients(analytic[k], numeric, rel_tol, abs_tol)
        worst_rel, worst_abs = max(worst_rel, rel), max(worst_abs, ab)
        ok = ok and passed
    return GradCheckResult(name, worst_rel, worst_abs, ok)
