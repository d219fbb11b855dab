"""Reverse-mode automatic differentiation on numpy arrays.

A :class:`Tape` records elementary operations (add, mul, div, tanh, sin,
cos, power, clamp, reductions, matmul) in execution order. Every recorded
node stores its operands and enough information to recompute its primal
value, so a tape can be replayed forward and swept backward in strict
reverse topological order. The engine is deliberately small: it supports
the scalar/array operations needed to express MLP surrogates, differential
equation residuals and their training losses, nothing more.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = ["Tape", "Var", "grad", "NonFiniteLossError", "TapeError"]


class TapeError(RuntimeError):
    """Raised for structural misuse of the tape (shape or domain errors)."""


class NonFiniteLossError(TapeError):
    """Raised when a loss is NaN/Inf before the reverse sweep starts."""


def _unbroadcast(adj: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum an adjoint over the axes that numpy broadcasting introduced."""
    if adj.shape == shape:
        return adj
    extra = adj.ndim - len(shape)
    if extra > 0:
        adj = adj.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and adj.shape[i] != 1)
    if axes:
        adj = adj.sum(axis=axes, keepdims=True)
    return adj


# Forward rules recompute a node's value from parent values; they are the
# single source of truth for both tracing and replay.
_FORWARD: dict[str, Callable] = {
    "add": lambda p, c: p[0] + p[1],
    "sub": lambda p, c: p[0] - p[1],
    "mul": lambda p, c: p[0] * p[1],
    "div": lambda p, c: p[0] / p[1],
    "neg": lambda p, c: -p[0],
    "pow": lambda p, c: p[0] ** c,
    "exp": lambda p, c: np.exp(p[0]),
    "tanh": lambda p, c: np.tanh(p[0]),
    "sin": lambda p, c: np.sin(p[0]),
    "cos": lambda p, c: np.cos(p[0]),
    "clamp": lambda p, c: np.clip(p[0], c[0], c[1]),
    "sum": lambda p, c: np.sum(p[0], axis=c),
    "matmul": lambda p, c: p[0] @ p[1],
    "take": lambda p, c: np.take(p[0], c[0], axis=c[1]),
    "stack": lambda p, c: np.stack(p, axis=1),
}


class Var:
    """One recorded tape node and a handle for building new ones.

    Arithmetic operators trace onto the owning tape; plain numbers and
    ndarrays are lifted to constant nodes. ``value`` is always a float64
    ndarray (possibly zero-dimensional).
    """

    __slots__ = ("tape", "idx", "op", "parents", "const", "value", "adjoint")

    def __init__(self, tape: "Tape", idx: int, op: str, parents: tuple, const, value: np.ndarray):
        self.tape = tape
        self.idx = idx
        self.op = op
        self.parents = parents
        self.const = const
        self.value = value
        self.adjoint: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def _lift(self, other) -> "Var":
        if isinstance(other, Var):
            if other.tape is not self.tape:
                raise TapeError("cannot combine nodes from different tapes")
            return other
        return self.tape.const(other)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        o = self._lift(other)
        return self.tape._push("add", (self, o), None)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return self.tape._push("sub", (self, o), None)

    def __rsub__(self, other):
        o = self._lift(other)
        return self.tape._push("sub", (o, self), None)

    def __mul__(self, other):
        o = self._lift(other)
        return self.tape._push("mul", (self, o), None)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        return self.tape._push("div", (self, o), None)

    def __rtruediv__(self, other):
        o = self._lift(other)
        return self.tape._push("div", (o, self), None)

    def __neg__(self):
        return self.tape._push("neg", (self,), None)

    def __pow__(self, exponent):
        if isinstance(exponent, Var):
            raise TapeError("only constant exponents are supported")
        return self.tape._push("pow", (self,), float(exponent))

    def __matmul__(self, other):
        o = self._lift(other)
        return self.tape._push("matmul", (self, o), None)

    # -- elementwise functions ------------------------------------------
    def exp(self):
        return self.tape._push("exp", (self,), None)

    def tanh(self):
        return self.tape._push("tanh", (self,), None)

    def sin(self):
        return self.tape._push("sin", (self,), None)

    def cos(self):
        return self.tape._push("cos", (self,), None)

    def sqrt(self):
        return self.tape._push("pow", (self,), 0.5)

    def clamp(self, lo, hi):
        """Elementwise max/min clamp; subgradient 1 inside [lo, hi], 0 outside."""
        return self.tape._push("clamp", (self,), (np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)))

    # -- reductions / indexing -------------------------------------------
    def sum(self, axis: int | None = None):
        return self.tape._push("sum", (self,), axis)

    def mean(self, axis: int | None = None):
        n = self.value.size if axis is None else self.value.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def take(self, index: int, axis: int = 0):
        """Select one slice along ``axis`` (e.g. a column of a 2-D node)."""
        return self.tape._push("take", (self,), (int(index), int(axis)))

    def col(self, j: int):
        return self.take(j, axis=1)

    def __repr__(self) -> str:
        return f"Var({self.op}, shape={self.value.shape})"


class Tape:
    """Ordered record of elementary operations for one derivative sweep.

    Tapes are confined to a single thread; independent tapes may run in
    parallel. Appending order is a topological order of the dataflow
    graph, which makes the reverse sweep a simple reversed iteration.
    """

    __slots__ = ("nodes",)

    def __init__(self) -> None:
        self.nodes: list[Var] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _push(self, op: str, parents: tuple, const) -> Var:
        value = _FORWARD[op](tuple(p.value for p in parents), const)
        node = Var(self, len(self.nodes), op, parents, const, value)
        self.nodes.append(node)
        return node

    def leaf(self, value) -> Var:
        """Create a differentiable input node (network weight, DE parameter)."""
        arr = np.asarray(value, dtype=float)
        node = Var(self, len(self.nodes), "leaf", (), None, arr)
        self.nodes.append(node)
        return node

    def const(self, value) -> Var:
        """Create a non-differentiable constant node (inputs, data, scalars)."""
        arr = np.asarray(value, dtype=float)
        node = Var(self, len(self.nodes), "const", (), None, arr)
        self.nodes.append(node)
        return node

    def stack_cols(self, cols: Sequence[Var]) -> Var:
        """Stack 1-D nodes of equal length into a 2-D (n, k) node."""
        return self._push("stack", tuple(cols), None)

    def replay(self) -> list[np.ndarray]:
        """Recompute all primal values from the recorded operations."""
        values: list[np.ndarray] = []
        for node in self.nodes:
            if node.op in ("leaf", "const"):
                values.append(node.value)
            else:
                values.append(_FORWARD[node.op](tuple(values[p.idx] for p in node.parents), node.const))
        return values

    def first_nonfinite(self) -> Var | None:
        """Return the earliest node holding NaN/Inf, if any (diagnostics)."""
        for node in self.nodes:
            if not np.all(np.isfinite(node.value)):
                return node
        return None


# -- backward rules -------------------------------------------------------
# Each rule maps (node, adjoint, needs-mask) to per-parent adjoint
# contributions; a parent whose mask entry is False (constants) gets None
# so its contribution is never computed.

def _bw_add(n: Var, a, needs):
    return (
        _unbroadcast(a, n.parents[0].shape) if needs[0] else None,
        _unbroadcast(a, n.parents[1].shape) if needs[1] else None,
    )


def _bw_sub(n: Var, a, needs):
    return (
        _unbroadcast(a, n.parents[0].shape) if needs[0] else None,
        _unbroadcast(-a, n.parents[1].shape) if needs[1] else None,
    )


def _bw_mul(n: Var, a, needs):
    x, y = n.parents
    return (
        _unbroadcast(a * y.value, x.shape) if needs[0] else None,
        _unbroadcast(a * x.value, y.shape) if needs[1] else None,
    )


def _bw_div(n: Var, a, needs):
    x, y = n.parents
    inv = 1.0 / y.value
    return (
        _unbroadcast(a * inv, x.shape) if needs[0] else None,
        _unbroadcast(-a * x.value * inv * inv, y.shape) if needs[1] else None,
    )


def _bw_neg(n: Var, a, needs):
    return (-a,)


def _bw_pow(n: Var, a, needs):
    (x,) = n.parents
    e = n.const
    return (a * e * x.value ** (e - 1.0),)


def _bw_exp(n: Var, a, needs):
    return (a * n.value,)


def _bw_tanh(n: Var, a, needs):
    return (a * (1.0 - n.value * n.value),)


def _bw_sin(n: Var, a, needs):
    return (a * np.cos(n.parents[0].value),)


def _bw_cos(n: Var, a, needs):
    return (-a * np.sin(n.parents[0].value),)


def _bw_clamp(n: Var, a, needs):
    (x,) = n.parents
    lo, hi = n.const
    inside = (x.value >= lo) & (x.value <= hi)
    return (a * inside,)


def _bw_sum(n: Var, a, needs):
    (x,) = n.parents
    if n.const is None:
        return (np.broadcast_to(a, x.shape).copy(),)
    return (np.broadcast_to(np.expand_dims(a, n.const), x.shape).copy(),)


def _bw_matmul(n: Var, a, needs):
    x, y = n.parents
    return (
        a @ y.value.T if needs[0] else None,
        x.value.T @ a if needs[1] else None,
    )


def _bw_take(n: Var, a, needs):
    (x,) = n.parents
    index, axis = n.const
    out = np.zeros_like(x.value)
    idx = [slice(None)] * out.ndim
    idx[axis] = index
    out[tuple(idx)] = a
    return (out,)


def _bw_stack(n: Var, a, needs):
    return tuple(a[:, j] if needs[j] else None for j in range(len(n.parents)))


_BACKWARD: dict[str, Callable] = {
    "add": _bw_add,
    "sub": _bw_sub,
    "mul": _bw_mul,
    "div": _bw_div,
    "neg": _bw_neg,
    "pow": _bw_pow,
    "exp": _bw_exp,
    "tanh": _bw_tanh,
    "sin": _bw_sin,
    "cos": _bw_cos,
    "clamp": _bw_clamp,
    "sum": _bw_sum,
    "matmul": _bw_matmul,
    "take": _bw_take,
    "stack": _bw_stack,
}


def grad(loss: Var, wrt: Iterable[Var]) -> list[np.ndarray]:
    """Reverse sweep: d(loss)/d(w) for every node in ``wrt``.

    ``loss`` must be a finite scalar node. Nodes in ``wrt`` that do not
    influence the loss receive a zero gradient of their own shape. The
    sweep visits nodes in strict reverse recording order, so accumulation
    order (and therefore floating-point rounding) is deterministic.
    """
    if loss.value.shape != ():
        raise TapeError(f"grad expects a scalar loss, got shape {loss.value.shape}")
    if not np.isfinite(loss.value):
        raise NonFiniteLossError(f"loss is {loss.value!r}; refusing reverse sweep")
    nodes = loss.tape.nodes
    for node in nodes[: loss.idx + 1]:
        node.adjoint = None
    loss.adjoint = np.ones((), dtype=float)
    for node in reversed(nodes[: loss.idx + 1]):
        a = node.adjoint
        if a is None or not node.parents:
            continue
        needs = tuple(p.op != "const" for p in node.parents)
        contribs = _BACKWARD[node.op](node, a, needs)
        for parent, contrib in zip(node.parents, contribs):
            if contrib is None or parent.op == "const":
                continue
            if parent.adjoint is None:
                parent.adjoint = contrib
            else:
                # out-of-place: contributions may alias the child adjoint
                parent.adjoint = parent.adjoint + contrib
    out = []
    for w in wrt:
        out.append(np.array(w.adjoint) if w.adjoint is not None else np.zeros_like(w.value))
    return out
