"""Comparison methods: weighted-sum PINN training and simplex search.

The weighted-sum baseline minimizes the unit-weighted composite loss
with the same optimizer, schedule, initialization and collocation sets
as the constrained trainer; DE parameters are kept positive through an
exponential transform instead of bound constraints. The simplex method
searches the forward-solve data misfit directly, with vertices clipped
to the parameter bounds after every transformation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import lift_params
from .losses import LossVector, build_losses, pinn_loss
from .mdmm import StepRejectedError, TrainConfig, TrainResult, _run_training
from .metrics import gamma
from .network import NetworkParams
from .optim import AdanState, adan_update
from .problems import Dataset, ProblemSpec
from .sampling import CollocationSet, build_collocation
from .solvers import SolverError
from .tape import Tape, grad

__all__ = ["train_pinn", "Simplex", "NelderMeadResult", "nelder_mead", "forward_objective"]


def train_pinn(problem: ProblemSpec, dataset: Dataset, config: TrainConfig,
               params0: NetworkParams | None = None,
               colloc: CollocationSet | None = None) -> TrainResult:
    """Weighted-sum training run with exp-transformed DE parameters.

    Minimizes L_data + L_de + L_ic + L_bc with Adan under the same
    schedule and initialization as the constrained trainer. The trainable
    carrier is phi with eta = exp(phi), so reported parameters are
    positive by construction; no bound constraints apply.
    """
    from .network import init_params

    net_spec = problem.network_spec(config.hidden_layers, config.hidden_width, config.fourier)
    if params0 is None:
        params0 = init_params(net_spec, config.seed)
    if colloc is None:
        colloc = build_collocation(problem, config.n_de, config.n_ic, config.n_bc)
    params = params0.copy()
    eta0 = config.initial_eta(problem)
    if np.any(eta0 <= 0.0):
        raise ValueError("exp parameterization needs a positive starting guess")
    phi = np.log(eta0)
    flat = [a for pair in zip(params.weights, params.biases) for a in pair] + [phi]
    adan = AdanState(flat, config.adan)
    p = problem.param_dim
    n_mult = len(["de", "ic"] + (["bc"] if problem.bc_kind is not None else [])) + p

    def step(lr: float) -> LossVector:
        tape = Tape()
        param_vars = lift_params(tape, params)
        phi_var = tape.leaf(phi)
        eta_var = phi_var.exp()
        eta_comps = [eta_var.take(j) for j in range(p)]
        losses = build_losses(tape, problem, net_spec, param_vars, eta_comps,
                              colloc, dataset)
        total = pinn_loss(losses)
        if not np.isfinite(total.value):
            raise StepRejectedError(f"composite loss is non-finite: {float(total.value)!r}")
        grads = grad(total, param_vars + [phi_var])
        if not all(np.all(np.isfinite(g)) for g in grads):
            raise StepRejectedError("non-finite gradient; step rejected")
        arrays = [a for pair in zip(params.weights, params.biases) for a in pair]
        arrays.append(phi)
        for arr, delta in zip(arrays, adan_update(grads, adan, lr, arrays)):
            arr += delta
        vals = {k: float(v.value) for k, v in losses.items()}
        return LossVector(vals["data"], vals["de"], vals["ic"], vals.get("bc", 0.0))

    result = _run_training(problem, config, "pinn", step,
                           lambda: np.exp(phi), lambda: np.zeros(n_mult))
    result.params = params
    result.eta_est = np.exp(phi)
    if config.log_path is not None:
        from .mdmm import write_loss_log

        write_loss_log(config.log_path, problem, result)
    return result


@dataclass
class Simplex:
    """p+1 vertices with objective values, kept sorted and inside bounds."""

    vertices: np.ndarray  # (p+1, p)
    values: np.ndarray  # (p+1,)
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5

    def sort(self) -> None:
        order = np.argsort(self.values, kind="stable")
        self.vertices = self.vertices[order]
        self.values = self.values[order]

    def spread(self) -> tuple[float, float]:
        """(value spread, coordinate spread) relative to the best vertex."""
        return (
            float(np.max(np.abs(self.values[1:] - self.values[0]))),
            float(np.max(np.abs(self.vertices[1:] - self.vertices[0]))),
        )


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    n_iter: int
    n_eval: int
    converged: bool


def nelder_mead(objective, x_start, bounds, options: dict | None = None) -> NelderMeadResult:
    """Bound-clipped simplex minimization.

    Standard reflect/expand/contract/shrink iterations (coefficients 1,
    2, 0.5, 0.5) with every candidate vertex clipped to the bounds. The
    initial simplex perturbs coordinate k of the start point by 5%
    (0.00025 absolute for zero entries). Terminates when both the value
    spread and the coordinate spread fall below their tolerances
    (default 1e-8) or after maxiter (default 400 p) iterations.
    Non-finite objective values are treated as +inf (worst).
    """
    opts = dict(options or {})
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    x0 = np.clip(np.asarray(x_start, dtype=float), lower, upper)
    p = x0.size
    maxiter = int(opts.pop("maxiter", 400 * p))
    fatol = float(opts.pop("fatol", 1e-8))
    xatol = float(opts.pop("xatol", 1e-8))
    if opts:
        raise ValueError(f"unknown nelder_mead options: {sorted(opts)}")

    n_eval = 0

    def f(x) -> float:
        nonlocal n_eval
        n_eval += 1
        val = objective(x)
        return float(val) if np.isfinite(val) else float("inf")

    vertices = [x0]
    for k in range(p):
        v = x0.copy()
        v[k] = v[k] * 1.05 if v[k] != 0.0 else 0.00025
        vertices.append(np.clip(v, lower, upper))
    simplex = Simplex(np.asarray(vertices), np.array([f(v) for v in vertices]))
    simplex.sort()

    def clipped(x):
        return np.clip(x, lower, upper)

    converged = False
    it = 0
    while it < maxiter:
        fspread, xspread = simplex.spread()
        if fspread < fatol and xspread < xatol:
            converged = True
            break
        it += 1
        best, worst = simplex.vertices[0], simplex.vertices[-1]
        centroid = simplex.vertices[:-1].mean(axis=0)
        xr = clipped(centroid + simplex.reflection * (centroid - worst))
        fr = f(xr)
        if fr < simplex.values[0]:
            xe = clipped(centroid + simplex.expansion * (centroid - worst))
            fe = f(xe)
            if fe < fr:
                simplex.vertices[-1], simplex.values[-1] = xe, fe
            else:
                simplex.vertices[-1], simplex.values[-1] = xr, fr
        elif fr < simplex.values[-2]:
            simplex.vertices[-1], simplex.values[-1] = xr, fr
        else:
            if fr < simplex.values[-1]:
                xc = clipped(centroid + simplex.contraction * (centroid - worst))
                fc = f(xc)
                shrink = fc > fr
                if not shrink:
                    simplex.vertices[-1], simplex.values[-1] = xc, fc
            else:
                xcc = clipped(centroid - simplex.contraction * (centroid - worst))
                fcc = f(xcc)
                shrink = fcc >= simplex.values[-1]
                if not shrink:
                    simplex.vertices[-1], simplex.values[-1] = xcc, fcc
            if shrink:
                for i in range(1, p + 1):
                    simplex.vertices[i] = clipped(
                        best + simplex.shrink * (simplex.vertices[i] - best)
                    )
                    simplex.values[i] = f(simplex.vertices[i])
        simplex.sort()
    return NelderMeadResult(simplex.vertices[0].copy(), float(simplex.values[0]),
                            it, n_eval, converged)


def forward_objective(problem: ProblemSpec, dataset: Dataset, kind: str | None = None):
    """Map eta to the data misfit of a full forward solve.

    Solver failures (stiffness, unresolvable parameter regimes) signal an
    infeasible region by returning +inf. Deterministic per eta for a
    fixed dataset.
    """
    kind = kind or problem.data_loss_kind
    t_solve = np.unique(problem.obs_t)

    def objective(eta) -> float:
        try:
            ref = problem.solve(eta, t_solve)
        except SolverError:
            return float("inf")
        pred = ref.eval_points(problem.obs_t, problem.obs_x)
        return gamma(dataset, pred, kind)

    return objective
