"""The four training loss terms and the weighted-sum composite loss.

L_de, L_ic and L_bc are means of squared residuals over their point
sets; L_data is a root-mean-square misfit, either absolute or with the
residual divided elementwise by the data (relative). Vector residuals
reduce through the squared Euclidean norm before averaging. All
builders trace onto a tape so gradients flow to network weights and DE
parameters; summation order is fixed, making evaluations deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import mlp_jet
from .network import NetworkSpec
from .problems import Dataset, ProblemSpec
from .sampling import CollocationSet
from .tape import Tape, Var

__all__ = [
    "LossVector",
    "DataKindError",
    "data_loss",
    "de_loss",
    "ic_loss",
    "bc_loss",
    "pinn_loss",
    "build_losses",
]


class DataKindError(ValueError):
    """Relative data loss requested for data containing exact zeros."""


@dataclass(frozen=True)
class LossVector:
    """Loss terms at one iterate; ``bc`` is 0 for problems without boundaries."""

    data: float
    de: float
    ic: float
    bc: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.data, self.de, self.ic, self.bc)

    def max(self) -> float:
        return max(self.as_tuple())


def _mean_sq(resid: Var) -> Var:
    return (resid * resid).mean()


def data_loss(pred: Var, values: np.ndarray, kind: str) -> Var:
    """Root-mean-square misfit over all points and components.

    ``kind`` is "absolute" or "relative"; the relative form divides each
    residual entry by the corresponding datum and refuses zero data.
    """
    values = np.asarray(values, dtype=float)
    resid = pred - values
    if kind == "relative":
        if np.any(values == 0.0):
            raise DataKindError("relative data loss undefined for zero data; use kind='absolute'")
        resid = resid / values
    elif kind != "absolute":
        raise ValueError(f"unknown data loss kind '{kind}'")
    return _mean_sq(resid).sqrt()


def _split_cols(node: Var | None, m: int) -> list[Var] | None:
    if node is None:
        return None
    return [node.col(j) for j in range(m)]


def de_loss(tape: Tape, problem: ProblemSpec, net_spec: NetworkSpec,
            param_vars: list[Var], eta_components: list[Var],
            colloc: CollocationSet) -> Var:
    """Mean squared DE residual over the interior collocation points."""
    jet = mlp_jet(tape, net_spec, param_vars, colloc.interior_x, colloc.interior_t,
                  problem.jet_order)
    m = problem.state_dim
    terms = problem.residual_terms(
        colloc.interior_x, colloc.interior_t,
        _split_cols(jet.u, m), eta_components, _split_cols(jet.u_t, m),
        _split_cols(jet.u_x, m), _split_cols(jet.u_xx, m),
    )
    sq = terms[0] * terms[0]
    for term in terms[1:]:
        sq = sq + term * term
    return sq.mean()


def ic_loss(tape: Tape, problem: ProblemSpec, net_spec: NetworkSpec,
            param_vars: list[Var], colloc: CollocationSet) -> Var:
    """Mean squared deviation from the initial function at t = 0."""
    jet = mlp_jet(tape, net_spec, param_vars, colloc.ic_x, colloc.ic_t, 0)
    if problem.kind == "ode":
        target = problem.initial_state()
    else:
        target = problem.initial_state(colloc.ic_x)[:, None]
    return _mean_sq(jet.u - target)


def bc_loss(tape: Tape, problem: ProblemSpec, net_spec: NetworkSpec,
            param_vars: list[Var], colloc: CollocationSet) -> Var:
    """Mean squared boundary operator on the boundary faces.

    Dirichlet uses network values, zero-flux (Neumann) uses u_x jets.
    """
    if problem.bc_kind == "dirichlet0":
        jet = mlp_jet(tape, net_spec, param_vars, colloc.bc_x, colloc.bc_t, 0)
        return _mean_sq(jet.u)
    if problem.bc_kind == "neumann0":
        jet = mlp_jet(tape, net_spec, param_vars, colloc.bc_x, colloc.bc_t, 1)
        return _mean_sq(jet.u_x)
    raise ValueError(f"problem '{problem.name}' has no boundary operator")


def pinn_loss(loss_vars: dict[str, Var], weights: dict[str, float] | None = None) -> Var:
    """Weighted-sum composite loss; all weights default to one."""
    weights = weights or {}
    total = None
    for name, term in loss_vars.items():
        w = float(weights.get(name, 1.0))
        if w < 0.0:
            raise ValueError("loss weights must be nonnegative")
        piece = term * w
        total = piece if total is None else total + piece
    if total is None:
        raise ValueError("no loss terms given")
    return total


def build_losses(tape: Tape, problem: ProblemSpec, net_spec: NetworkSpec,
                 param_vars: list[Var], eta_components: list[Var],
                 colloc: CollocationSet, dataset: Dataset,
                 data_kind: str | None = None) -> dict[str, Var]:
    """All loss terms at the current iterate, on one shared tape.

    Returns {"data", "de", "ic"} plus "bc" for PDE problems.
    """
    pred = mlp_jet(tape, net_spec, param_vars, dataset.x, dataset.t, 0).u
    out = {
        "data": data_loss(pred, dataset.values, data_kind or problem.data_loss_kind),
        "de": de_loss(tape, problem, net_spec, param_vars, eta_components, colloc),
        "ic": ic_loss(tape, problem, net_spec, param_vars, colloc),
    }
    if problem.bc_kind is not None:
        out["bc"] = bc_loss(tape, problem, net_spec, param_vars, colloc)
    return out
