"""Constrained training: augmented Lagrangian with simultaneous updates.

The data misfit is the objective; DE, IC and BC losses enter as equality
constraints and DE-parameter bounds as clamp-based infeasibilities. Each
step builds one tape, runs one backward pass through the augmented
Lagrangian, applies the Adan update to the primal variables (network
weights and DE parameters) and plain gradient ascent to the Lagrange
multipliers - all from the same pre-step iterate, so primal and dual
updates are simultaneous rather than nested.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .jets import lift_params
from .losses import LossVector, build_losses
from .network import NetworkParams, NetworkSpec, init_params
from .optim import AdanConfig, AdanState, adan_update, lr_schedule
from .problems import Dataset, ProblemSpec
from .sampling import CollocationSet, build_collocation
from .tape import Tape, Var, grad

__all__ = [
    "MultiplierState",
    "TrainConfig",
    "TrainResult",
    "MdmmState",
    "StepRejectedError",
    "DivergenceError",
    "infeasibility",
    "augmented_lagrangian",
    "mdmm_step",
    "train_pinnverse",
    "constrained_minimize",
]


class StepRejectedError(RuntimeError):
    """A step produced non-finite gradients and was not applied."""


class DivergenceError(RuntimeError):
    """Training diverged (loss blow-up or repeated step rejections)."""


def infeasibility(eta, lower, upper):
    """Signed bound violation: clamp(eta; lower, upper) - eta.

    Zero inside the bounds, lower - eta below them, upper - eta above.
    """
    return np.clip(eta, lower, upper) - np.asarray(eta, dtype=float)


@dataclass
class MultiplierState:
    """Lagrange multipliers and penalty coefficients.

    One equality multiplier per constraint (keyed "de", "ic", "bc"), one
    bound multiplier per DE parameter. All penalties default to one.
    """

    lam: dict[str, float]
    chi: np.ndarray
    c: dict[str, float]
    d: np.ndarray

    def __post_init__(self):
        if any(ci <= 0.0 for ci in self.c.values()) or np.any(self.d <= 0.0):
            raise ValueError("penalty coefficients must be positive")

    @classmethod
    def for_problem(cls, problem: ProblemSpec, penalty: float = 1.0) -> "MultiplierState":
        names = ["de", "ic"] + (["bc"] if problem.bc_kind is not None else [])
        p = problem.param_dim
        return cls({n: 0.0 for n in names}, np.zeros(p),
                   {n: float(penalty) for n in names}, np.full(p, float(penalty)))

    @property
    def eq_names(self) -> list[str]:
        return list(self.lam)

    def flat(self) -> np.ndarray:
        return np.concatenate([[self.lam[n] for n in self.lam], self.chi])


def augmented_lagrangian(losses: dict[str, Var], V: Var | None,
                         mult: MultiplierState) -> Var:
    """L_data + sum_i (lam_i L_i + c_i/2 L_i^2) + sum_j (chi_j V_j + d_j/2 V_j^2)."""
    la = losses["data"]
    for name in mult.eq_names:
        L = losses[name]
        la = la + mult.lam[name] * L + (0.5 * mult.c[name]) * (L * L)
    if V is not None:
        la = la + (V * mult.chi).sum() + ((V * V) * (0.5 * mult.d)).sum()
    return la


@dataclass
class TrainConfig:
    """Shared knobs for the constrained and weighted-sum trainers.

    ``multiplier_ascent`` selects how the dual variables climb: "adaptive"
    routes the (negated) constraint values through their own Adan state,
    mirroring the primal updates; "plain" uses lambda_i += alpha * L_i
    verbatim. Adaptive is the default: plain ascent stalls once the
    constraint losses become small because its increments scale with the
    loss itself.
    """

    epochs: int
    n_de: int | None = None
    n_ic: int = 1024
    n_bc: int = 1024
    seed: int = 0
    xi: float = 0.0
    eta_start: np.ndarray | None = None
    lr_max: float = 1e-2
    lr_min: float = 1e-4
    lr_tail: int = 30_000
    adan: AdanConfig = field(default_factory=AdanConfig)
    penalty: float = 1.0
    multiplier_ascent: str = "adaptive"
    hidden_layers: int = 2
    hidden_width: int = 20
    fourier: bool | None = None
    divergence_threshold: float = 1e8
    max_rejections: int = 10
    log_path: str | Path | None = None

    def initial_eta(self, problem: ProblemSpec) -> np.ndarray:
        if self.eta_start is not None:
            return np.asarray(self.eta_start, dtype=float).copy()
        return (1.0 + self.xi) * problem.eta_true


@dataclass
class TrainResult:
    """Final iterate plus the full per-epoch trajectory of one training run."""

    method: str
    params: NetworkParams
    eta_est: np.ndarray
    epochs_run: int
    seed: int
    loss_log: np.ndarray  # (epochs, 4): data, de, ic, bc
    lr_log: np.ndarray
    eta_log: np.ndarray
    multiplier_log: np.ndarray
    aborted: bool = False
    abort_reason: str | None = None

    @property
    def final_losses(self) -> LossVector:
        row = self.loss_log[-1]
        return LossVector(*row)

    def summary(self, problem: ProblemSpec) -> dict:
        rel = (problem.eta_true - self.eta_est) / problem.eta_true
        beta = float(np.sqrt(np.mean(rel * rel)))
        fl = self.final_losses
        return {
            "method": self.method,
            "eta_est": [float(v) for v in self.eta_est],
            "eta_true": [float(v) for v in problem.eta_true],
            "beta": beta,
            "final_losses": {"data": fl.data, "de": fl.de, "ic": fl.ic, "bc": fl.bc},
            "epochs": self.epochs_run,
            "seed": self.seed,
        }

    def save_json(self, path, problem: ProblemSpec) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(problem), fh, indent=2)


def write_loss_log(path, problem: ProblemSpec, result: TrainResult) -> None:
    """Per-epoch CSV: losses, learning rate, DE parameters, multipliers."""
    n_eq = max(0, result.multiplier_log.shape[1] - problem.param_dim)
    eq_names = ["de", "ic", "bc"][:n_eq]
    header = (["epoch", "L_data", "L_de", "L_ic", "L_bc", "alpha"]
              + [f"eta_{n}" for n in problem.param_names]
              + [f"lambda_{n}" for n in eq_names]
              + [f"chi_{n}" for n in problem.param_names])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for e in range(result.epochs_run):
            row = [e + 1, *result.loss_log[e], result.lr_log[e],
                   *result.eta_log[e], *result.multiplier_log[e]]
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


@dataclass
class MdmmState:
    """Everything one simultaneous update reads and writes."""

    problem: ProblemSpec
    net_spec: NetworkSpec
    colloc: CollocationSet
    dataset: Dataset
    params: NetworkParams
    eta: np.ndarray
    mult: MultiplierState
    adan: AdanState
    dual_adan: AdanState | None = None  # None selects plain ascent
    epoch: int = 0

    @classmethod
    def create(cls, problem: ProblemSpec, dataset: Dataset, config: TrainConfig,
               params0: NetworkParams | None = None,
               colloc: CollocationSet | None = None) -> "MdmmState":
        net_spec = problem.network_spec(config.hidden_layers, config.hidden_width,
                                        config.fourier)
        if params0 is None:
            params0 = init_params(net_spec, config.seed)
        if colloc is None:
            colloc = build_collocation(problem, config.n_de, config.n_ic, config.n_bc)
        eta = config.initial_eta(problem)
        params = params0.copy()
        arrays = [a for pair in zip(params.weights, params.biases) for a in pair] + [eta]
        mult = MultiplierState.for_problem(problem, config.penalty)
        if config.multiplier_ascent == "adaptive":
            dual = AdanState([np.zeros(len(mult.lam)), np.zeros_like(mult.chi)], config.adan)
        elif config.multiplier_ascent == "plain":
            dual = None
        else:
            raise ValueError(f"unknown multiplier_ascent '{config.multiplier_ascent}'")
        return cls(problem, net_spec, colloc, dataset, params, eta, mult,
                   AdanState(arrays, config.adan), dual)


def mdmm_step(state: MdmmState, lr: float) -> LossVector:
    """One simultaneous primal/dual update from the current iterate.

    Builds one tape, runs one backward pass through the augmented
    Lagrangian, applies the Adan deltas to (theta, eta) and plain ascent
    to the multipliers using the same pre-step constraint values. Raises
    :class:`StepRejectedError` (state untouched) on non-finite gradients.
    """
    problem = state.problem
    tape = Tape()
    param_vars = lift_params(tape, state.params)
    eta_var = tape.leaf(state.eta)
    eta_comps = [eta_var.take(j) for j in range(problem.param_dim)]
    losses = build_losses(tape, problem, state.net_spec, param_vars, eta_comps,
                          state.colloc, state.dataset)
    V = eta_var.clamp(problem.eta_lower, problem.eta_upper) - eta_var
    la = augmented_lagrangian(losses, V, state.mult)

    loss_values = {k: float(v.value) for k, v in losses.items()}
    v_values = np.array(V.value)
    if not np.isfinite(la.value):
        raise StepRejectedError(f"augmented Lagrangian is non-finite: {loss_values}")
    grads = grad(la, param_vars + [eta_var])
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise StepRejectedError("non-finite gradient; step rejected")

    flat = [a for pair in zip(state.params.weights, state.params.biases) for a in pair]
    flat.append(state.eta)
    deltas = adan_update(grads, state.adan, lr, flat)
    for arr, delta in zip(flat, deltas):
        arr += delta
    eq_values = np.array([loss_values[name] for name in state.mult.eq_names])
    if state.dual_adan is None:
        lam_step = lr * eq_values
        chi_step = lr * v_values
    else:
        # gradient ascent through the optimizer: feed the negated constraint
        # values as "gradients" so the resulting delta climbs the Lagrangian
        d_lam, d_chi = adan_update([-eq_values, -v_values], state.dual_adan, lr)
        lam_step, chi_step = d_lam, d_chi
    for i, name in enumerate(state.mult.eq_names):
        state.mult.lam[name] += lam_step[i]
    state.mult.chi += chi_step
    state.epoch += 1
    return LossVector(loss_values["data"], loss_values["de"], loss_values["ic"],
                      loss_values.get("bc", 0.0))


def _run_training(problem: ProblemSpec, config: TrainConfig, method: str,
                  step_fn, eta_of, mult_of) -> TrainResult:
    """Shared epoch loop: schedule, logging, rejection/divergence handling."""
    epochs = int(config.epochs)
    loss_log = np.empty((epochs, 4))
    lr_log = np.empty(epochs)
    eta_log = np.empty((epochs, problem.param_dim))
    mult0 = mult_of()
    mult_log = np.empty((epochs, mult0.size))
    rejections = 0
    aborted, reason = False, None
    e = 0
    while e < epochs:
        lr = lr_schedule(e, epochs, config.lr_max, config.lr_min, config.lr_tail)
        try:
            lv = step_fn(lr)
        except StepRejectedError as err:
            # state is untouched; retry, give up after repeated rejections
            rejections += 1
            if rejections >= config.max_rejections:
                aborted, reason = True, f"aborted after {rejections} rejected steps: {err}"
                break
            continue
        rejections = 0
        loss_log[e] = lv.as_tuple()
        lr_log[e] = lr
        eta_log[e] = eta_of()
        mult_log[e] = mult_of()
        e += 1
        if lv.max() > config.divergence_threshold or not np.isfinite(lv.max()):
            aborted, reason = True, f"diverged at epoch {e}: {lv}"
            break
    result = TrainResult(method, None, None, e, config.seed, loss_log[:e],
                         lr_log[:e], eta_log[:e], mult_log[:e], aborted, reason)
    return result


def train_pinnverse(problem: ProblemSpec, dataset: Dataset, config: TrainConfig,
                    params0: NetworkParams | None = None,
                    colloc: CollocationSet | None = None) -> TrainResult:
    """Constrained training run; returns the final iterate and full logs.

    DE parameters start at (1 + xi) * eta_true (or an explicit
    ``eta_start``), multipliers at zero. The run aborts with a partial
    log on divergence or repeated step rejections.
    """
    state = MdmmState.create(problem, dataset, config, params0, colloc)
    result = _run_training(
        problem, config, "pinnverse",
        lambda lr: mdmm_step(state, lr),
        lambda: state.eta.copy(),
        lambda: state.mult.flat(),
    )
    result.params = state.params
    result.eta_est = state.eta.copy()
    if config.log_path is not None:
        write_loss_log(config.log_path, problem, result)
    return result


def constrained_minimize(build, x0, steps: int, lr: float = 1e-2,
                         lr_min: float | None = None, penalty: float = 1.0,
                         adan: AdanConfig | None = None):
    """Generic MDMM driver for small equality-constrained problems.

    ``build(tape, x)`` returns (objective, [constraint terms]); each
    constraint is a signed scalar driven to zero. ``lr`` is the peak
    learning rate of the standard decaying schedule (adaptive updates
    orbit a fixed point at fixed step size, so the toy driver decays
    exactly like the trainers do; pass ``lr_min=lr`` to disable).
    Returns (x, lam, history of (objective, max |constraint|)). Used for
    validating the update dynamics on problems with known KKT points.
    """
    x = np.asarray(x0, dtype=float).copy()
    state = AdanState([x], adan)
    if lr_min is None:
        lr_min = lr / 100.0
    lam = None
    history = []
    for k in range(steps):
        alpha = lr_schedule(k, steps, lr_max=lr, lr_min=lr_min)
        tape = Tape()
        xv = tape.leaf(x)
        obj, cons = build(tape, xv)
        if lam is None:
            lam = np.zeros(len(cons))
        la = obj
        for i, con in enumerate(cons):
            la = la + lam[i] * con + (0.5 * penalty) * (con * con)
        con_values = np.array([float(c.value) for c in cons])
        (dx,) = grad(la, [xv])
        (delta,) = adan_update([dx], state, alpha)
        x += delta
        lam += alpha * con_values
        history.append((float(obj.value), float(np.max(np.abs(con_values))) if cons else 0.0))
    return x, lam, history
