"""Low-discrepancy point sets for collocation, IC and BC enforcement.

Points come from the Sobol sequence (Gray-code construction, direction
numbers from the standard Joe-Kuo table for dimension 2) and are affinely
mapped onto the problem domain without any reordering, which preserves
the low-discrepancy structure. The leading all-zeros point is skipped by
default since it sits in a degenerate domain corner. Construction is
fully deterministic: the same problem and counts always yield the same
set, and the set is held fixed for a whole training run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemSpec

__all__ = ["sobol", "CollocationSet", "build_collocation"]

_NBITS = 32
_SCALE = float(2**_NBITS)


def _direction_integers(dim_index: int) -> list[int]:
    """Direction integers V_k (already shifted to 32-bit fixed point).

    dim_index 0 is the van der Corput dimension (all m_k = 1); dim_index 1
    uses the degree-1 primitive polynomial from the Joe-Kuo table
    (m_1 = 1, m_k = 2 m_{k-1} XOR m_{k-1}).
    """
    ms = [1]
    for _ in range(1, _NBITS):
        ms.append((2 * ms[-1]) ^ ms[-1] if dim_index == 1 else 1)
    return [m << (_NBITS - k) for k, m in enumerate(ms, start=1)]


def sobol(dim: int, n: int, skip: int = 1) -> np.ndarray:
    """First ``n`` Sobol points in [0, 1)^dim after skipping ``skip`` points."""
    if dim not in (1, 2):
        raise ValueError(f"sobol supports dimensions 1 and 2, got {dim}")
    if n < 0 or skip < 0:
        raise ValueError("n and skip must be nonnegative")
    vs = [_direction_integers(d) for d in range(dim)]
    out = np.empty((n, dim))
    state = [0] * dim
    for i in range(n + skip):
        if i >= skip:
            for d in range(dim):
                out[i - skip, d] = state[d] / _SCALE
        # Antonov-Saleev: flip the direction of the lowest zero bit of i
        c = 0
        while (i >> c) & 1:
            c += 1
        for d in range(dim):
            state[d] ^= vs[d][c]
    return out


@dataclass(frozen=True, eq=False)
class CollocationSet:
    """Interior, initial-condition and boundary-condition point sets.

    Interior points lie strictly inside the space-time domain, IC points
    sit at t = 0, BC points on the spatial boundary faces. Spatial arrays
    are ``None`` for ODE problems; the BC block is ``None`` when the
    problem has no boundary operator.
    """

    interior_t: np.ndarray
    interior_x: np.ndarray | None
    ic_t: np.ndarray
    ic_x: np.ndarray | None
    bc_t: np.ndarray | None
    bc_x: np.ndarray | None

    @property
    def n_de(self) -> int:
        return self.interior_t.size

    @property
    def n_ic(self) -> int:
        return self.ic_t.size

    @property
    def n_bc(self) -> int:
        return 0 if self.bc_t is None else self.bc_t.size


def build_collocation(
    problem: ProblemSpec,
    n_de: int | None = None,
    n_ic: int = 1024,
    n_bc: int = 1024,
    seed: int | None = None,
) -> CollocationSet:
    """Sobol points mapped onto the problem domain.

    ``seed`` is accepted for interface symmetry but has no effect: the
    unscrambled Sobol construction is deterministic per (problem, counts).
    BC times are split evenly between the two boundary faces, each face
    taking its own contiguous block of the sequence.
    """
    del seed
    if n_de is None:
        n_de = problem.default_n_de
    if min(n_de, n_ic) <= 0 or (problem.kind == "pde" and n_bc <= 0):
        raise ValueError("collocation counts must be positive")
    T = problem.t_final
    if problem.kind == "ode":
        interior_t = sobol(1, n_de)[:, 0] * T
        return CollocationSet(interior_t, None, np.zeros(n_ic), None, None, None)

    lo, hi = problem.x_range
    pts = sobol(2, n_de)
    interior_x = lo + pts[:, 0] * (hi - lo)
    interior_t = pts[:, 1] * T
    ic_x = lo + sobol(1, n_ic)[:, 0] * (hi - lo)
    bc_times = sobol(1, n_bc)[:, 0] * T
    n_lo = n_bc // 2
    bc_x = np.concatenate([np.full(n_lo, lo), np.full(n_bc - n_lo, hi)])
    return CollocationSet(interior_t, interior_x, np.zeros(n_ic), ic_x, bc_times, bc_x)
