"""The four benchmark systems and their synthetic observation data.

Each benchmark bundles a residual operator, initial/boundary conditions,
the domain, ground-truth parameters with physically plausible bounds,
and an observation schedule. Residual functions are polymorphic: they
accept plain numpy arrays (reference validation) or tape nodes
(training), since both support the same arithmetic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import solvers
from .network import NetworkSpec, default_fourier
from .solvers import ReferenceSolution, solve_ode, solve_pde

__all__ = [
    "ProblemSpec",
    "Dataset",
    "SingularParameterError",
    "reaction_residual",
    "fhn_residual",
    "fisher_residual",
    "burgers_residual",
    "reaction",
    "fitzhugh_nagumo",
    "fisher_kpp",
    "burgers",
    "get_problem",
    "BENCHMARKS",
    "apply_noise",
    "generate_dataset",
]


class SingularParameterError(ValueError):
    """A DE parameter value makes the residual operator singular."""


def _scalar(z) -> float:
    """Numeric value of a float or tape node (for validity checks only)."""
    v = getattr(z, "value", z)
    return float(np.asarray(v).reshape(()))


# -- residual operators ----------------------------------------------------

def reaction_residual(t, u, eta, u_t):
    """Reversible two-reaction kinetics, A <-> B + C and C <-> D.

    u = ([A], [B], [C], [D]), eta = (k1, k2, k3, k4); each component is
    rhs(u, eta) - du/dt.
    """
    A, B, C, D = u
    k1, k2, k3, k4 = eta
    fwd = k1 * A - k2 * (B * C)
    exch = k3 * C - k4 * D
    return [-fwd - u_t[0], fwd - u_t[1], fwd - exch - u_t[2], exch - u_t[3]]


def fhn_residual(t, u, eta, u_t):
    """Spatially homogeneous FitzHugh-Nagumo excitable dynamics.

    u = (u, v), eta = (a, b, r) with r the timescale separation; r = 0
    makes the recovery equation singular.
    """
    uu, v = u
    a, b, r = eta
    if _scalar(r) == 0.0:
        raise SingularParameterError("timescale parameter r must be nonzero")
    return [uu - (uu * uu * uu) / 3.0 - v - u_t[0], (uu + a - b * v) / r - u_t[1]]


def fisher_residual(x, t, u, eta, u_t, u_xx):
    """Reaction-diffusion with logistic growth: D u_xx + rho u (1 - u) - u_t."""
    D, rho = eta
    return D * u_xx + rho * (u * (1.0 - u)) - u_t


def burgers_residual(x, t, u, eta, u_t, u_x, u_xx):
    """Viscous convection: u_t + u u_x - nu u_xx."""
    (nu,) = eta
    return u_t + u * u_x - nu * u_xx


# -- problem specifications --------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One benchmark: residual operator, conditions, domain, truth, schedule."""

    name: str
    kind: str  # "ode" | "pde"
    state_dim: int
    param_dim: int
    param_names: tuple[str, ...]
    component_names: tuple[str, ...]
    eta_true: np.ndarray
    eta_lower: np.ndarray
    eta_upper: np.ndarray
    t_final: float
    x_range: tuple[float, float] | None
    bc_kind: str | None  # "dirichlet0" | "neumann0" | None
    data_loss_kind: str  # "absolute" | "relative"
    jet_order: int  # input-derivative order required by the residual
    needs_ux: bool  # residual uses u_x (beyond any BC use)
    obs_t: np.ndarray
    obs_x: np.ndarray | None
    ic_fn: Callable
    rhs_fn: Callable | None
    residual_fn: Callable
    default_n_de: int = 16384
    default_epochs: int = 500_000
    use_fourier: bool = False

    def initial_state(self, x=None) -> np.ndarray:
        """u(x, 0); for ODEs the constant initial vector."""
        if self.kind == "ode":
            return self.ic_fn()
        return self.ic_fn(np.asarray(x, dtype=float))

    def rhs(self, t, y, eta) -> np.ndarray:
        if self.rhs_fn is None:
            raise ValueError(f"problem '{self.name}' has no ODE right-hand side")
        return self.rhs_fn(t, y, eta)

    def residual_terms(self, x, t, u: Sequence, eta: Sequence, u_t: Sequence,
                       u_x: Sequence | None, u_xx: Sequence | None) -> list:
        """Uniform residual interface; returns one term per state component."""
        out = self.residual_fn(x, t, u, eta, u_t, u_x, u_xx)
        return out if isinstance(out, list) else [out]

    def network_spec(self, hidden_layers: int = 2, hidden_width: int = 20,
                     fourier: bool | None = None) -> NetworkSpec:
        """Surrogate architecture for this benchmark, domain normalization included."""
        if self.kind == "ode":
            return NetworkSpec(1, self.state_dim, ((0.0, self.t_final),),
                               hidden_layers, hidden_width)
        use_fourier = self.use_fourier if fourier is None else fourier
        cfg = default_fourier(self.x_range) if use_fourier else None
        return NetworkSpec(2, self.state_dim, (self.x_range, (0.0, self.t_final)),
                           hidden_layers, hidden_width, fourier=cfg)

    def solve(self, eta, t_eval, rtol: float = 1e-9, atol: float = 1e-11,
              nx: int | None = None) -> ReferenceSolution:
        if self.kind == "ode":
            return solve_ode(self, eta, t_eval, rtol, atol)
        return solve_pde(self, eta, t_eval, nx=nx, rtol=rtol, atol=atol)


def reaction() -> ProblemSpec:
    T = 10.0
    return ProblemSpec(
        name="reaction",
        kind="ode",
        state_dim=4,
        param_dim=4,
        param_names=("k1", "k2", "k3", "k4"),
        component_names=("A", "B", "C", "D"),
        eta_true=np.array([1.5, 0.5, 1.0, 0.1]),
        eta_lower=np.array([0.0, 0.0, 0.0, 0.0]),
        eta_upper=np.array([10.0, 4.0, 7.0, 0.7]),
        t_final=T,
        x_range=None,
        bc_kind=None,
        data_loss_kind="relative",
        jet_order=1,
        needs_ux=False,
        obs_t=np.arange(1, 11) * (T / 10.0),
        obs_x=None,
        ic_fn=lambda: np.array([1.0, 0.0, 0.2, 0.0]),
        rhs_fn=lambda t, y, eta: np.array(
            reaction_residual(t, y, eta, np.zeros(4))
        ),
        residual_fn=lambda x, t, u, eta, u_t, u_x, u_xx: reaction_residual(t, u, eta, u_t),
    )


def fitzhugh_nagumo() -> ProblemSpec:
    T = 40.0
    return ProblemSpec(
        name="fhn",
        kind="ode",
        state_dim=2,
        param_dim=3,
        param_names=("a", "b", "r"),
        component_names=("u", "v"),
        eta_true=np.array([0.7, 0.8, 12.5]),
        eta_lower=np.array([0.0, 0.0, 0.0]),
        eta_upper=np.array([10.0, 10.0, 100.0]),
        t_final=T,
        x_range=None,
        bc_kind=None,
        data_loss_kind="relative",
        jet_order=1,
        needs_ux=False,
        obs_t=np.arange(1, 8) * (T / 7.0),
        obs_x=None,
        ic_fn=lambda: np.array([0.0, 0.0]),
        rhs_fn=lambda t, y, eta: np.array(fhn_residual(t, y, eta, np.zeros(2))),
        residual_fn=lambda x, t, u, eta, u_t, u_x, u_xx: fhn_residual(t, u, eta, u_t),
        default_n_de=10_000,
    )


def fisher_kpp() -> ProblemSpec:
    times = np.array([1.0, 2.0])
    xs = np.linspace(0.0, 10.0, 9)
    return ProblemSpec(
        name="fisher",
        kind="pde",
        state_dim=1,
        param_dim=2,
        param_names=("D", "rho"),
        component_names=("u",),
        eta_true=np.array([0.5, 1.0]),
        eta_lower=np.array([0.1, 0.5]),
        eta_upper=np.array([0.5, 6.0]),
        t_final=2.0,
        x_range=(0.0, 10.0),
        bc_kind="neumann0",
        data_loss_kind="absolute",
        jet_order=2,
        needs_ux=False,
        obs_t=np.repeat(times, xs.size),
        obs_x=np.tile(xs, times.size),
        ic_fn=lambda x: 0.1 * np.exp(-x),
        rhs_fn=None,
        residual_fn=lambda x, t, u, eta, u_t, u_x, u_xx: fisher_residual(
            x, t, u[0], eta, u_t[0], u_xx[0]
        ),
        default_epochs=300_000,
    )


def burgers() -> ProblemSpec:
    times = np.array([0.2, 0.4])
    xs = np.linspace(-0.75, 0.75, 7)
    return ProblemSpec(
        name="burgers",
        kind="pde",
        state_dim=1,
        param_dim=1,
        param_names=("nu",),
        component_names=("u",),
        eta_true=np.array([0.01]),
        eta_lower=np.array([0.0]),
        eta_upper=np.array([0.07]),
        t_final=1.0,
        x_range=(-1.0, 1.0),
        bc_kind="dirichlet0",
        data_loss_kind="absolute",
        jet_order=2,
        needs_ux=True,
        obs_t=np.repeat(times, xs.size),
        obs_x=np.tile(xs, times.size),
        ic_fn=lambda x: -np.sin(np.pi * x),
        rhs_fn=None,
        residual_fn=lambda x, t, u, eta, u_t, u_x, u_xx: burgers_residual(
            x, t, u[0], eta, u_t[0], u_x[0], u_xx[0]
        ),
        default_epochs=150_000,
        use_fourier=True,
    )


BENCHMARKS: dict[str, Callable[[], ProblemSpec]] = {
    "reaction": reaction,
    "fhn": fitzhugh_nagumo,
    "fisher": fisher_kpp,
    "burgers": burgers,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return BENCHMARKS[name]()
    except KeyError:
        raise ValueError(f"unknown benchmark '{name}'; choose from {sorted(BENCHMARKS)}") from None


# -- synthetic observations ---------------------------------------------------

@dataclass(eq=False)
class Dataset:
    """Noisy observations (x_i, t_i, u_i) with their noise metadata.

    ``values`` has shape (n_points, state_dim); ``sigma`` holds the
    per-entry noise scale zeta * |y| used to draw the perturbations.
    """

    t: np.ndarray
    x: np.ndarray | None
    values: np.ndarray
    sigma: np.ndarray
    zeta: float
    seed: int

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "t", "component_index", "value", "sigma"])
            for i in range(self.n_points):
                xi = "nan" if self.x is None else repr(float(self.x[i]))
                for c in range(self.values.shape[1]):
                    writer.writerow([xi, repr(float(self.t[i])), c,
                                     repr(float(self.values[i, c])), repr(float(self.sigma[i, c]))])

    @classmethod
    def from_csv(cls, path, zeta: float = float("nan"), seed: int = -1) -> "Dataset":
        rows = np.genfromtxt(path, delimiter=",", skip_header=1)
        rows = np.atleast_2d(rows)
        n_comp = int(rows[:, 2].max()) + 1
        pts = rows[rows[:, 2] == 0]
        values = rows[:, 3].reshape(-1, n_comp)
        sigma = rows[:, 4].reshape(-1, n_comp)
        x = None if np.all(np.isnan(pts[:, 0])) else pts[:, 0]
        return cls(pts[:, 1], x, values, sigma, zeta, seed)


def apply_noise(clean: np.ndarray, zeta: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Heteroscedastic Gaussian perturbation with scale zeta * |y|.

    Returns (noisy values, per-entry noise scales); zero-valued
    observations stay noiseless. Deterministic per seed.
    """
    if not 0.0 <= zeta <= 0.3:
        raise ValueError(f"noise level zeta={zeta} outside the supported range [0, 0.3]")
    clean = np.asarray(clean, dtype=float)
    sigma = zeta * np.abs(clean)
    rng = np.random.default_rng(seed)
    return clean + sigma * rng.standard_normal(clean.shape), sigma


def generate_dataset(problem: ProblemSpec, eta_true, zeta: float, seed: int) -> Dataset:
    """Sample the reference solution on the observation schedule and perturb it."""
    t_solve = np.unique(problem.obs_t)
    ref = problem.solve(eta_true, t_solve)
    clean = ref.eval_points(problem.obs_t, problem.obs_x)
    noisy, sigma = apply_noise(clean, zeta, seed)
    obs_x = None if problem.obs_x is None else np.asarray(problem.obs_x, dtype=float).copy()
    return Dataset(problem.obs_t.copy(), obs_x, noisy, sigma, float(zeta), int(seed))
