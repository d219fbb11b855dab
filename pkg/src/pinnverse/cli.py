"""Command-line front door.

Subcommands:
  run       execute the experiment grid(s) from a config file
  validate  check a config file without running anything
  oracle    forward-solve one benchmark at given parameters

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .experiment import (
    ConfigError,
    parse_config_file,
    run_experiment,
    write_trajectory_csv,
)
from .problems import get_problem
from .solvers import SolverError

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinnverse",
        description="Inverse-problem parameter estimation with constrained PINN training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run experiment grids from a config file")
    run_p.add_argument("--config", required=True, help="INI config, one section per benchmark")
    run_p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key in every section (repeatable)")
    run_p.add_argument("--workers", type=int, default=None,
                       help="process-pool size for grid cells (default: from config)")

    val_p = sub.add_parser("validate", help="validate a config file")
    val_p.add_argument("--config", required=True)

    orc_p = sub.add_parser("oracle", help="forward solve at given parameters")
    orc_p.add_argument("benchmark", help="benchmark id (reaction, fhn, fisher, burgers)")
    orc_p.add_argument("--eta", required=True, help="comma-separated parameter values")
    orc_p.add_argument("--out", required=True, help="output trajectory CSV")
    return parser


def _cmd_run(args) -> int:
    configs = parse_config_file(args.config, args.override)
    for cfg in configs:
        path = run_experiment(cfg, workers=args.workers)
        print(f"[{cfg.benchmark}] results written to {path}")
    return 0


def _cmd_validate(args) -> int:
    configs = parse_config_file(args.config)
    for cfg in configs:
        grid = len(cfg.zetas) * len(cfg.xis) * cfg.replicates
        print(f"[{cfg.benchmark}] ok: {len(cfg.methods)} methods x {grid} cells "
              f"-> {cfg.output_dir}")
    return 0


def _cmd_oracle(args) -> int:
    try:
        problem = get_problem(args.benchmark)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    try:
        eta = np.array([float(tok) for tok in args.eta.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse --eta '{args.eta}' as comma-separated floats") from None
    if eta.size != problem.param_dim:
        raise ConfigError(f"benchmark '{problem.name}' expects {problem.param_dim} "
                          f"parameters, got {eta.size}")
    if problem.kind == "ode":
        t = np.linspace(0.0, problem.t_final, 1001)
        ref = problem.solve(eta, t)
        write_trajectory_csv(args.out, t, None, ref.values)
    else:
        times = np.unique(np.append(problem.obs_t, problem.t_final))
        ref = problem.solve(eta, times)
        probe_t = np.repeat(times, ref.x.size)
        probe_x = np.tile(ref.x, times.size)
        write_trajectory_csv(args.out, probe_t, probe_x, ref.values.reshape(-1, 1))
    print(f"oracle trajectory written to {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (SolverError, OSError, RuntimeError, ValueError) as err:
        print(f"runtime failure: {type(err).__name__}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
