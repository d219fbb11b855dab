"""Evaluation metrics: parameter error, data misfit, solution deviation.

beta is the relative RMS error between true and estimated DE parameters.
gamma compares noisy observations against a forward solve at the
estimated parameters (absolute or relative RMS, sharing the data-loss
definition). mu is the maximum absolute deviation between a candidate
solution and the true-parameter reference over a dense probe grid. The
power-law fit extracts the algebraic convergence exponent from a loss
trajectory.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "beta",
    "gamma",
    "mu",
    "fit_power_law",
    "ScenarioResult",
    "RESULT_COLUMNS",
    "write_results_header",
    "append_result",
]


def beta(eta_true, eta_est) -> float:
    """Relative root mean squared error of the estimated parameters."""
    eta_true = np.asarray(eta_true, dtype=float)
    eta_est = np.asarray(eta_est, dtype=float)
    if eta_true.shape != eta_est.shape:
        raise ValueError("parameter vectors must have equal length")
    if np.any(eta_true == 0.0):
        raise ValueError("beta undefined for zero true parameters")
    rel = (eta_true - eta_est) / eta_true
    return float(np.sqrt(np.mean(rel * rel)))


def gamma(dataset, prediction: np.ndarray, kind: str) -> float:
    """RMS misfit between noisy data and a forward-solve prediction.

    ``kind`` "absolute" or "relative"; shares the data-loss definition,
    so relative form refuses data containing exact zeros.
    """
    values = np.asarray(dataset.values, dtype=float)
    prediction = np.asarray(prediction, dtype=float)
    if prediction.shape != values.shape:
        raise ValueError("prediction and data shapes differ")
    resid = prediction - values
    if kind == "relative":
        if np.any(values == 0.0):
            raise ValueError("relative misfit undefined for zero data")
        resid = resid / values
    elif kind != "absolute":
        raise ValueError(f"unknown misfit kind '{kind}'")
    return float(np.sqrt(np.mean(resid * resid)))


def mu(candidate: np.ndarray, reference: np.ndarray) -> float:
    """Maximum absolute deviation over a probe grid (all components)."""
    candidate = np.asarray(candidate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if candidate.shape != reference.shape:
        raise ValueError("probe grids must match")
    return float(np.max(np.abs(candidate - reference)))


def fit_power_law(losses, burn_in: int = 1000) -> tuple[float, float]:
    """Least-squares exponent of L ~ epoch^(-a) past the burn-in.

    ``losses`` holds one value per epoch (epoch numbering starts at 1).
    Returns (a, standard error of a); non-positive loss entries in the
    window are dropped with a warning.
    """
    losses = np.asarray(losses, dtype=float)
    epochs = np.arange(1, losses.size + 1)
    mask = epochs > burn_in
    if not np.any(mask):
        raise ValueError(f"loss log of length {losses.size} has no epochs past burn_in={burn_in}")
    epochs, losses = epochs[mask], losses[mask]
    positive = losses > 0.0
    if not np.all(positive):
        warnings.warn(f"dropping {int(np.sum(~positive))} non-positive loss entries from the fit")
        epochs, losses = epochs[positive], losses[positive]
    if epochs.size < 3:
        raise ValueError("too few positive loss entries for a power-law fit")
    x = np.log(epochs)
    y = np.log(losses)
    xbar = x.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    resid = y - (y.mean() + slope * (x - xbar))
    dof = max(x.size - 2, 1)
    stderr = float(np.sqrt(np.sum(resid * resid) / dof / sxx))
    return -slope, stderr


RESULT_COLUMNS = ["method", "zeta", "xi", "seed", "beta", "gamma_abs",
                  "gamma_rel", "mu", "runtime_s", "status"]


@dataclass
class ScenarioResult:
    """One (method, noise, initial-guess) cell of the experiment grid."""

    method: str
    zeta: float
    xi: float
    seed: int
    beta: float
    gamma_abs: float
    gamma_rel: float
    mu: float
    runtime_s: float
    status: str = "ok"

    def row(self) -> list:
        return [self.method, repr(float(self.zeta)), repr(float(self.xi)), self.seed,
                repr(float(self.beta)), repr(float(self.gamma_abs)),
                repr(float(self.gamma_rel)), repr(float(self.mu)),
                repr(float(self.runtime_s)), self.status]


def write_results_header(path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(RESULT_COLUMNS)


def append_result(path, result: ScenarioResult) -> None:
    with open(path, "a", newline="") as fh:
        csv.writer(fh).writerow(result.row())
