"""Forward-mode derivative jets nested inside the reverse-mode tape.

A :class:`Jet` carries a primal value plus first input-derivatives
(d/dt, d/dx) and the second spatial derivative (d2/dx2). Every slot is a
tape node, so losses built from jet components stay differentiable with
respect to network weights and DE parameters. Inputs are at most
2-dimensional while parameters number in the hundreds, hence
forward-mode for input derivatives nested inside reverse-mode for
parameter gradients; the maximum input-derivative order is 2, which
covers every residual operator in the benchmark suite.

``None`` in a slot means "structurally zero" and is propagated without
creating tape nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkParams, NetworkSpec, _features
from .tape import Tape, Var

__all__ = ["Jet", "JetValue", "JetEvalError", "eval_jet", "mlp_jet", "lift_params"]

_SLOTS = ("val", "dt", "dx", "dxx")


class JetEvalError(RuntimeError):
    """Raised when a jet evaluation produces non-finite primal values."""


def _madd(a: Var | None, b: Var | None) -> Var | None:
    if a is None:
        return b
    if b is None:
        return a
    return a + b


class Jet:
    """Truncated derivative bundle; each non-None slot is a tape node."""

    __slots__ = _SLOTS

    def __init__(self, val: Var, dt: Var | None = None, dx: Var | None = None, dxx: Var | None = None):
        self.val = val
        self.dt = dt
        self.dx = dx
        self.dxx = dxx

    def _map_linear(self, f) -> "Jet":
        """Apply a linear map f to every slot (derivatives commute with it)."""
        return Jet(
            f(self.val),
            None if self.dt is None else f(self.dt),
            None if self.dx is None else f(self.dx),
            None if self.dxx is None else f(self.dxx),
        )

    # -- linear operations ------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.val + other.val,
                _madd(self.dt, other.dt),
                _madd(self.dx, other.dx),
                _madd(self.dxx, other.dxx),
            )
        return Jet(self.val + other, self.dt, self.dx, self.dxx)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, Jet) else -other)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._map_linear(lambda v: v * other)
        f, g = self, other
        dt = _madd(
            None if f.dt is None else f.dt * g.val,
            None if g.dt is None else f.val * g.dt,
        )
        dx = _madd(
            None if f.dx is None else f.dx * g.val,
            None if g.dx is None else f.val * g.dx,
        )
        cross = None if (f.dx is None or g.dx is None) else 2.0 * (f.dx * g.dx)
        dxx = _madd(
            _madd(
                None if f.dxx is None else f.dxx * g.val,
                None if g.dxx is None else f.val * g.dxx,
            ),
            cross,
        )
        return Jet(f.val * g.val, dt, dx, dxx)

    __rmul__ = __mul__

    def linear(self, W: Var, b: Var | None = None) -> "Jet":
        """Jet through a dense layer: every slot is mapped by W, bias hits the value."""
        out = self._map_linear(lambda v: v @ W)
        if b is not None:
            out.val = out.val + b
        return out

    # -- nonlinear elementwise operations -----------------------------------
    def _chain(self, y: Var, d1: Var, d2: Var | None) -> "Jet":
        """Compose with scalar y(u): first derivative d1, second derivative d2."""
        dt = None if self.dt is None else d1 * self.dt
        dx = None if self.dx is None else d1 * self.dx
        dxx = None
        if self.dxx is not None:
            dxx = d1 * self.dxx
        if self.dx is not None and d2 is not None:
            dxx = _madd(dxx, d2 * (self.dx * self.dx))
        return Jet(y, dt, dx, dxx)

    def _needs_second(self) -> bool:
        return self.dx is not None or self.dxx is not None

    def tanh(self) -> "Jet":
        y = self.val.tanh()
        s = 1.0 - y * y
        d2 = (-2.0 * y) * s if self._needs_second() else None
        return self._chain(y, s, d2)

    def sin(self) -> "Jet":
        y = self.val.sin()
        c = self.val.cos()
        return self._chain(y, c, -y if self._needs_second() else None)

    def cos(self) -> "Jet":
        y = self.val.cos()
        s = self.val.sin()
        return self._chain(y, -s, -y if self._needs_second() else None)

    def exp(self) -> "Jet":
        y = self.val.exp()
        return self._chain(y, y, y if self._needs_second() else None)


@dataclass
class JetValue:
    """Network output and its input derivatives at a batch of points.

    All entries are (n, output_dim) tape nodes; a ``None`` derivative was
    not requested (or does not exist, e.g. spatial slots for ODE nets).
    """

    u: Var
    u_t: Var | None = None
    u_x: Var | None = None
    u_xx: Var | None = None


def lift_params(tape: Tape, params: NetworkParams) -> list[Var]:
    """Create differentiable leaves for all weight/bias arrays, in layer order."""
    lifted: list[Var] = []
    for W, b in zip(params.weights, params.biases):
        lifted.append(tape.leaf(W))
        lifted.append(tape.leaf(b))
    return lifted


def _feature_jet(tape: Tape, spec: NetworkSpec, x, t, order: int) -> Jet:
    """Input embedding as one jet of constants.

    The embedding depends only on the inputs, never on parameters, so its
    value and every input derivative are plain arrays; normalization and
    Fourier frequencies enter the derivative slots by the chain rule.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = t.shape[0]
    feats = _features(spec, x, t)
    nf = feats.shape[1]
    if order == 0:
        return Jet(tape.const(feats))

    d_dt = np.zeros((n, nf))
    if spec.input_dim == 1:
        d_dt[:, 0] = spec.normalization(0)[0]
        return Jet(tape.const(feats), dt=tape.const(d_dt))

    d_dt[:, -1] = spec.normalization(1)[0]
    d_dx = np.zeros((n, nf))
    d_dxx = np.zeros((n, nf)) if order >= 2 else None
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if spec.fourier is not None:
        for k, w in enumerate(spec.fourier.frequencies):
            sw, cw = np.sin(w * x), np.cos(w * x)
            d_dx[:, 2 * k] = w * cw
            d_dx[:, 2 * k + 1] = -w * sw
            if d_dxx is not None:
                d_dxx[:, 2 * k] = -w * w * sw
                d_dxx[:, 2 * k + 1] = -w * w * cw
    else:
        d_dx[:, 0] = spec.normalization(0)[0]
    return Jet(
        tape.const(feats),
        dt=tape.const(d_dt),
        dx=tape.const(d_dx),
        dxx=None if d_dxx is None else tape.const(d_dxx),
    )


def mlp_jet(tape: Tape, spec: NetworkSpec, param_vars: list[Var], x, t, order: int) -> JetValue:
    """Propagate a jet through the MLP given already-lifted parameter nodes."""
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported derivative order {order}; tape supports 0, 1, 2")
    h = _feature_jet(tape, spec, x, t, order)
    n_layers = len(param_vars) // 2
    for i in range(n_layers - 1):
        h = h.linear(param_vars[2 * i], param_vars[2 * i + 1]).tanh()
    h = h.linear(param_vars[2 * (n_layers - 1)], param_vars[2 * n_layers - 1])
    return JetValue(h.val, h.dt, h.dx, h.dxx if order == 2 else None)


def eval_jet(
    spec: NetworkSpec,
    params: NetworkParams,
    x,
    t,
    order: int,
    tape: Tape | None = None,
    param_vars: list[Var] | None = None,
) -> JetValue:
    """Evaluate the network together with its input derivatives.

    ``order`` 0 returns values only, 1 adds u_t (and u_x for PDE nets),
    2 adds u_xx. All outputs stay connected to the tape, so parameter
    gradients flow through them. Raises for orders above 2 and reports
    the originating operation if the primal turns NaN/Inf.
    """
    if tape is None:
        tape = Tape()
    if param_vars is None:
        param_vars = lift_params(tape, params)
    out = mlp_jet(tape, spec, param_vars, x, t, order)
    for slot in (out.u, out.u_t, out.u_x, out.u_xx):
        if slot is not None and not np.all(np.isfinite(slot.value)):
            origin = tape.first_nonfinite()
            op = origin.op if origin is not None else "<unknown>"
            raise JetEvalError(f"non-finite primal value; first produced by op '{op}'")
    return out
