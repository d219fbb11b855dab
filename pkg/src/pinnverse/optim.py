"""Adan optimizer and the learning-rate schedule shared by all trainers.

Adan tracks exponential averages of the gradient, the gradient
difference, and the second moment of their Nesterov-style combination.
Coefficients follow the optimizer's reference implementation in the
"weight on new information" convention. The schedule decays linearly
from 1e-2 to 1e-4, holding the floor for the last 30,000 epochs (for
shorter runs the decay simply spans the whole run).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["AdanConfig", "AdanState", "adan_update", "lr_schedule"]


@dataclass(frozen=True)
class AdanConfig:
    beta1: float = 0.02
    beta2: float = 0.08
    beta3: float = 0.01
    eps: float = 1e-8
    weight_decay: float = 0.0


class AdanState:
    """Per-parameter optimizer buffers, zero-initialized, step counter at 0."""

    def __init__(self, params: list[np.ndarray], config: AdanConfig | None = None):
        self.config = config or AdanConfig()
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.n = [np.zeros_like(p) for p in params]
        self.g_prev = [np.zeros_like(p) for p in params]
        self.step = 0


def adan_update(grads: list[np.ndarray], state: AdanState, lr: float,
                params: list[np.ndarray] | None = None) -> list[np.ndarray]:
    """One Adan step; returns the additive parameter deltas.

    m <- (1-b1) m + b1 g;  v <- (1-b2) v + b2 (g - g_prev);
    n <- (1-b3) n + b3 (g + (1-b2)(g - g_prev))^2; all bias-corrected,
    then delta = -lr (m_hat + (1-b2) v_hat) / (sqrt(n_hat) + eps).
    On the first step the previous gradient is taken to equal the
    current one, so the difference term starts at zero. Weight decay is
    the optimizer's proximal form and needs ``params``.
    """
    cfg = state.config
    if cfg.weight_decay != 0.0 and params is None:
        raise ValueError("weight decay requires the current parameter values")
    state.step += 1
    k = state.step
    b1, b2, b3 = cfg.beta1, cfg.beta2, cfg.beta3
    bc1 = 1.0 - (1.0 - b1) ** k
    bc2 = 1.0 - (1.0 - b2) ** k
    bc3 = 1.0 - (1.0 - b3) ** k
    deltas = []
    for i, g in enumerate(grads):
        g = np.asarray(g, dtype=float)
        diff = np.zeros_like(g) if k == 1 else g - state.g_prev[i]
        state.m[i] = (1.0 - b1) * state.m[i] + b1 * g
        state.v[i] = (1.0 - b2) * state.v[i] + b2 * diff
        upd = g + (1.0 - b2) * diff
        state.n[i] = (1.0 - b3) * state.n[i] + b3 * upd * upd
        state.g_prev[i] = g.copy()
        step_dir = (state.m[i] / bc1 + (1.0 - b2) * (state.v[i] / bc2))
        delta = -lr * step_dir / (np.sqrt(state.n[i] / bc3) + cfg.eps)
        if cfg.weight_decay != 0.0:
            p = params[i]
            delta = (p + delta) / (1.0 + lr * cfg.weight_decay) - p
        deltas.append(delta)
    return deltas


def lr_schedule(epoch: int, total_epochs: int, lr_max: float = 1e-2,
                lr_min: float = 1e-4, tail: int = 30_000) -> float:
    """Linear decay from ``lr_max`` to ``lr_min``, constant over the tail.

    The floor is reached ``tail`` epochs before the end; runs no longer
    than the tail decay linearly over their whole length instead.
    """
    if not 0 <= epoch < total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs})")
    decay_end = total_epochs - tail
    if decay_end <= 0:
        decay_end = total_epochs
    if epoch >= decay_end:
        return lr_min
    return lr_max + (lr_min - lr_max) * (epoch / decay_end)
