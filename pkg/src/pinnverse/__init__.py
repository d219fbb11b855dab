"""Inverse-problem parameter estimation for ODE/PDE models.

Trains physics-informed neural network surrogates whose physics terms
are enforced as explicit constraints via an augmented Lagrangian with
simultaneous primal/dual updates, alongside a weighted-sum baseline and
a forward-solve simplex baseline, on four classical benchmark systems.
"""

from .baselines import forward_objective, nelder_mead, train_pinn
from .experiment import ExperimentConfig, parse_config_file, run_cell, run_experiment
from .jets import Jet, JetValue, eval_jet, lift_params
from .losses import LossVector, bc_loss, build_losses, data_loss, de_loss, ic_loss, pinn_loss
from .mdmm import (
    MultiplierState,
    TrainConfig,
    TrainResult,
    augmented_lagrangian,
    constrained_minimize,
    infeasibility,
    mdmm_step,
    train_pinnverse,
)
from .metrics import beta, fit_power_law, gamma, mu
from .network import FourierConfig, NetworkParams, NetworkSpec, forward, fourier_embed, init_params
from .optim import AdanConfig, AdanState, adan_update, lr_schedule
from .problems import (
    BENCHMARKS,
    Dataset,
    ProblemSpec,
    burgers,
    burgers_residual,
    fhn_residual,
    fisher_kpp,
    fisher_residual,
    fitzhugh_nagumo,
    generate_dataset,
    get_problem,
    reaction,
    reaction_residual,
)
from .sampling import CollocationSet, build_collocation, sobol
from .solvers import ReferenceSolution, SolverError, integrate_dopri5, solve_ode, solve_pde
from .tape import Tape, Var, grad

__version__ = "0.1.0"
