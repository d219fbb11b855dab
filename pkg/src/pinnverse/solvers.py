"""Classical forward solvers: adaptive Runge-Kutta and method of lines.

These provide the high-precision reference trajectories used as data
oracle and post-hoc validator. The ODE integrator is the Dormand-Prince
5(4) embedded pair with standard step-size control; requested output
times are hit exactly by capping the step, so reported values carry the
full solver accuracy rather than interpolation error. PDE benchmarks are
semi-discretized with 2nd-order central differences (ghost-node Neumann
for zero-flux boundaries, conservative-form convection for the viscous
convection benchmark) and integrated in time with the same solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "SolverError",
    "StiffnessError",
    "MeshResolutionError",
    "ReferenceSolution",
    "integrate_dopri5",
    "solve_ode",
    "solve_pde",
]


class SolverError(RuntimeError):
    """Base class for forward-solver failures."""


class StiffnessError(SolverError):
    """Step size underflowed; the problem is too stiff for this explicit method."""


class MeshResolutionError(SolverError):
    """The spatial mesh cannot resolve the requested parameter regime."""


# Dormand-Prince 5(4) tableau. Row 7 equals the 5th-order weights (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.append(_A[6], 0.0)
# b5 - b4: local error estimator weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 50_000_000


def _rms(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, t0, y0, f0, t_bound, rtol, atol):
    """Hairer-style initial step size estimate."""
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_bound - t0)


def integrate_dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0: np.ndarray,
    t_eval: np.ndarray,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> np.ndarray:
    """Integrate y' = f(t, y) and return y at each requested time.

    ``t_eval`` must be sorted and lie within ``t_span``. Steps are capped
    so the solver lands exactly on every output time.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size and (t_eval[0] < t0 - 1e-12 or t_eval[-1] > t1 + 1e-12):
        raise ValueError("t_eval outside integration span")
    if np.any(np.diff(t_eval) < 0):
        raise ValueError("t_eval must be sorted ascending")

    y = np.asarray(y0, dtype=float).copy()
    out = np.empty((t_eval.size, y.size))
    i_out = 0
    t = t0
    while i_out < t_eval.size and t_eval[i_out] <= t0 + 1e-14 * max(1.0, abs(t0)):
        out[i_out] = y
        i_out += 1

    k = np.empty((7, y.size))
    k[0] = f(t, y)
    h = _initial_step(f, t, y, k[0], t1, rtol, atol)
    rejected = False
    steps = 0
    while t < t1 - 1e-14 * max(1.0, abs(t1)):
        steps += 1
        if steps > _MAX_STEPS:
            raise StiffnessError(f"exceeded {_MAX_STEPS} steps at t={t:.6g}")
        if h < 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StiffnessError(f"step size underflow at t={t:.6g} (h={h:.3e})")
        # cap to the end of the span and to the next requested output time
        h = min(h, t1 - t)
        if i_out < t_eval.size:
            h = min(h, t_eval[i_out] - t) if t_eval[i_out] > t else h

        for s in range(1, 7):
            k[s] = f(t + _C[s] * h, y + h * (_A[s] @ k[:s]))
        y_new = y + h * (_B5 @ k[:7])
        err_vec = h * (_E @ k[:7])
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)

        if err <= 1.0:
            t_new = t + h
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            if rejected:
                factor = min(1.0, factor)
            rejected = False
            t, y = t_new, y_new
            k[0] = k[6]  # FSAL
            while i_out < t_eval.size and t_eval[i_out] <= t + 1e-12 * max(1.0, abs(t)):
                out[i_out] = y
                i_out += 1
            h = h * factor
        else:
            rejected = True
            h = h * max(_MIN_FACTOR, _SAFETY * err ** -0.2)
    while i_out < t_eval.size:
        out[i_out] = y
        i_out += 1
    return out


@dataclass(eq=False)
class ReferenceSolution:
    """Forward-solver trajectory on a fixed output schedule.

    For ODEs ``values`` has shape (n_times, state_dim); for PDEs
    (n_times, n_nodes) with the spatial grid in ``x`` and linear
    interpolation between nodes.
    """

    solver: str
    rtol: float
    atol: float
    t: np.ndarray
    values: np.ndarray
    x: np.ndarray | None = None

    def _time_index(self, t_query: float) -> int:
        i = int(np.argmin(np.abs(self.t - t_query)))
        if abs(self.t[i] - t_query) > 1e-9 * max(1.0, abs(t_query)):
            raise ValueError(f"time {t_query} not on the solution schedule")
        return i

    def at_time(self, t_query: float) -> np.ndarray:
        """State vector (ODE) or nodal values (PDE) at one scheduled time."""
        return self.values[self._time_index(t_query)]

    def eval_points(self, t_pts: np.ndarray, x_pts: np.ndarray | None) -> np.ndarray:
        """Values at observation points; returns (n_pts, state_dim).

        PDE solutions are interpolated linearly in space; every requested
        time must be on the output schedule.
        """
        t_pts = np.asarray(t_pts, dtype=float)
        if self.x is None:
            rows = [self.at_time(tq) for tq in t_pts]
            return np.asarray(rows)
        x_pts = np.asarray(x_pts, dtype=float)
        vals = np.empty((t_pts.size, 1))
        for j, (tq, xq) in enumerate(zip(t_pts, x_pts)):
            vals[j, 0] = np.interp(xq, self.x, self.at_time(tq))
        return vals


def solve_ode(problem, eta, t_eval, rtol: float = 1e-9, atol: float = 1e-11) -> ReferenceSolution:
    """Solve an ODE benchmark at the given parameters.

    Dense output lands exactly on ``t_eval``; raises
    :class:`StiffnessError` on step-size underflow.
    """
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise ValueError("eta must be finite")
    t_eval = np.asarray(t_eval, dtype=float)
    y0 = problem.initial_state()
    values = integrate_dopri5(
        lambda t, y: problem.rhs(t, y, eta), (0.0, float(max(t_eval[-1], 0.0))), y0, t_eval, rtol, atol
    )
    return ReferenceSolution("dopri5", rtol, atol, t_eval.copy(), values)


def _fisher_rhs(eta, dx):
    D, rho = float(eta[0]), float(eta[1])
    inv_dx2 = 1.0 / (dx * dx)

    def rhs(t, u):
        lap = np.empty_like(u)
        lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        # ghost nodes mirror the first interior node: zero-flux boundaries
        lap[0] = 2.0 * (u[1] - u[0]) * inv_dx2
        lap[-1] = 2.0 * (u[-2] - u[-1]) * inv_dx2
        return D * lap + rho * u * (1.0 - u)

    return rhs


def _burgers_rhs(eta, dx):
    nu = float(eta[0])
    inv_dx2 = 1.0 / (dx * dx)
    inv_2dx = 0.5 / dx

    def rhs(t, u):
        out = np.zeros_like(u)
        flux = 0.5 * u * u
        out[1:-1] = -(flux[2:] - flux[:-2]) * inv_2dx + nu * (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dx2
        # Dirichlet endpoints stay pinned at zero
        return out

    return rhs


_DEFAULT_NODES = {"fisher": 1001, "burgers": 2001}


def solve_pde(
    problem,
    eta,
    t_eval,
    nx: int | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> ReferenceSolution:
    """Method-of-lines solve of a PDE benchmark at the given parameters.

    Space is discretized with 2nd-order central differences on a uniform
    grid (defaults: 1001 nodes for the reaction-diffusion benchmark, 2001
    for viscous convection); time integration uses the adaptive
    Dormand-Prince solver. Raises :class:`MeshResolutionError` when the
    grid cannot resolve the requested viscosity (cell Peclet check).
    """
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise ValueError("eta must be finite")
    if nx is None:
        nx = _DEFAULT_NODES[problem.name]
    lo, hi = problem.x_range
    x = np.linspace(lo, hi, nx)
    dx = x[1] - x[0]
    u0 = problem.initial_state(x)

    if problem.name == "fisher":
        rhs = _fisher_rhs(eta, dx)
    elif problem.name == "burgers":
        nu = float(eta[0])
        if nu <= 0.0:
            raise MeshResolutionError("viscosity must be positive for the viscous solver")
        peclet = float(np.max(np.abs(u0))) * dx / (2.0 * nu)
        if peclet > 1.0:
            raise MeshResolutionError(
                f"cell Peclet number {peclet:.2f} > 1 at nu={nu:.3g}; refine the mesh"
            )
        rhs = _burgers_rhs(eta, dx)
    else:
        raise ValueError(f"no method-of-lines discretization for problem '{problem.name}'")

    t_eval = np.asarray(t_eval, dtype=float)
    values = integrate_dopri5(rhs, (0.0, float(t_eval[-1])), u0, t_eval, rtol, atol)
    return ReferenceSolution("mol-dopri5", rtol, atol, t_eval.copy(), values, x=x)
