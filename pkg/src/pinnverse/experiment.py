"""Batch experiment driver: method x benchmark x (noise, guess) grids.

Each grid cell draws its dataset from a stable hash of (benchmark, zeta,
xi, replicate), so every method inside a cell sees identical data and an
identical network initialization; reruns reproduce results bit-for-bit
up to the runtime column. Cells are independent and can execute in a
process pool; rows are appended to a single results CSV as cells finish.
A configurable highlight cell additionally exports per-epoch loss logs
and trajectory CSVs (network prediction, forward solve at the estimate,
true-parameter reference, noisy data).
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import forward_objective, nelder_mead, train_pinn
from .mdmm import TrainConfig, TrainResult, train_pinnverse, write_loss_log
from .metrics import ScenarioResult, append_result, beta, gamma, mu, write_results_header
from .network import forward, init_params
from .problems import Dataset, ProblemSpec, generate_dataset, get_problem
from .sampling import build_collocation
from .solvers import SolverError

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_file",
    "cell_seeds",
    "run_experiment",
    "run_cell",
    "export_trajectories",
    "write_trajectory_csv",
]

_METHODS = ("pinnverse", "pinn", "nelder-mead")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """One benchmark's grid: methods, noise levels, initial-guess deviations."""

    benchmark: str
    output_dir: Path
    methods: tuple[str, ...] = _METHODS
    zetas: tuple[float, ...] = (0.0, 0.05, 0.15, 0.25, 0.30)
    xis: tuple[float, ...] = (0.25, 0.75, 1.50, 5.00)
    replicates: int = 1
    epochs: int | None = None
    n_de: int | None = None
    n_ic: int = 1024
    n_bc: int = 1024
    hidden_layers: int = 2
    hidden_width: int = 20
    fourier: bool | None = None
    highlight: tuple[float, float] | None = None
    workers: int = 1
    probe_points: int = 1001

    def validate(self) -> None:
        try:
            get_problem(self.benchmark)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        if not self.methods:
            raise ConfigError("method list is empty")
        for m in self.methods:
            if m not in _METHODS:
                raise ConfigError(f"unknown method '{m}'; choose from {_METHODS}")
        if not self.zetas or any(not 0.0 <= z <= 0.3 for z in self.zetas):
            raise ConfigError("zeta values must lie in [0, 0.3]")
        if not self.xis or any(not 0.0 <= x <= 5.0 for x in self.xis):
            raise ConfigError("xi values must lie in [0, 5]")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError("epochs must be positive")
        for name in ("n_de", "n_ic", "n_bc", "hidden_layers", "hidden_width", "workers",
                     "probe_points"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be positive")


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_section(name: str, section) -> ExperimentConfig:
    cfg = ExperimentConfig(benchmark=name.strip().lower(),
                           output_dir=Path(section.get("output_dir", f"results/{name}")))
    try:
        if "methods" in section:
            cfg.methods = tuple(tok.strip() for tok in section["methods"].split(",") if tok.strip())
        if "zeta" in section:
            cfg.zetas = _parse_floats(section["zeta"])
        if "xi" in section:
            cfg.xis = _parse_floats(section["xi"])
        for key in ("replicates", "epochs", "n_de", "n_ic", "n_bc", "hidden_layers",
                    "hidden_width", "workers", "probe_points"):
            if key in section:
                setattr(cfg, key, int(section[key]))
        if "fourier" in section:
            raw = section["fourier"].strip().lower()
            if raw not in ("auto", "true", "false", "on", "off"):
                raise ConfigError(f"fourier must be auto/true/false, got '{raw}'")
            cfg.fourier = None if raw == "auto" else raw in ("true", "on")
        if "highlight" in section:
            raw = section["highlight"].strip().lower()
            if raw not in ("", "none"):
                vals = _parse_floats(raw)
                if len(vals) != 2:
                    raise ConfigError("highlight needs exactly two values: zeta, xi")
                cfg.highlight = (vals[0], vals[1])
    except (ValueError, TypeError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"section [{name}]: {err}") from None
    cfg.validate()
    return cfg


def parse_config_file(path, overrides: list[str] | None = None) -> list[ExperimentConfig]:
    """Read an INI-style config: one section per benchmark, key = value pairs.

    ``overrides`` are "key=value" strings applied to every section before
    parsing.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigError(f"cannot parse {path}: {err}") from None
    if not parser.sections():
        raise ConfigError(f"{path} defines no benchmark sections")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        for section in parser.sections():
            parser.set(section, key, value)
    return [_parse_section(name, parser[name]) for name in parser.sections()]


def cell_seeds(benchmark: str, zeta: float, xi: float, replicate: int) -> tuple[int, int]:
    """Stable (dataset seed, network seed) for one grid cell."""
    key = f"{benchmark}|{zeta:.12g}|{xi:.12g}|{replicate}".encode()
    digest = hashlib.sha256(key).digest()
    data_seed = int.from_bytes(digest[:8], "little") % (2**63)
    net_seed = int.from_bytes(digest[8:16], "little") % (2**63)
    return data_seed, net_seed


def _probe_grid(problem: ProblemSpec, n: int) -> tuple[np.ndarray, np.ndarray | None]:
    """(t, x) probe points for the max-deviation metric and exports."""
    if problem.kind == "ode":
        return np.linspace(0.0, problem.t_final, n), None
    times = np.unique(problem.obs_t)
    xs = np.linspace(problem.x_range[0], problem.x_range[1], n)
    return np.repeat(times, n), np.tile(xs, times.size)


def _reference_on_probe(problem: ProblemSpec, eta, probe_t, probe_x,
                        rtol: float = 1e-9) -> np.ndarray:
    ref = problem.solve(eta, np.unique(probe_t), rtol=rtol, atol=rtol * 1e-2)
    return ref.eval_points(probe_t, probe_x)


def write_trajectory_csv(path, probe_t, probe_x, values: np.ndarray) -> None:
    """Columns (x, t, component, value); x is nan for time-only problems."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "t", "component", "value"])
        for i in range(values.shape[0]):
            xi = "nan" if probe_x is None else repr(float(probe_x[i]))
            for c in range(values.shape[1]):
                writer.writerow([xi, repr(float(probe_t[i])), c, repr(float(values[i, c]))])


def export_trajectories(out_dir: Path, problem: ProblemSpec, method: str,
                        eta_est: np.ndarray, dataset: Dataset,
                        net: tuple | None, probe_t, probe_x,
                        reference: np.ndarray | None = None) -> None:
    """Write the highlight-cell curves for one method.

    Produces {method}_estimated_solution.csv (forward solve at the
    estimate), {method}_nn_prediction.csv when a trained network is
    given, plus the shared reference_solution.csv and data_points.csv if
    not already present.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if net is not None:
        spec, params = net
        nn_vals = forward(spec, params, probe_x, probe_t)
        write_trajectory_csv(out_dir / f"{method}_nn_prediction.csv", probe_t, probe_x, nn_vals)
    try:
        est_vals = _reference_on_probe(problem, eta_est, probe_t, probe_x)
        write_trajectory_csv(out_dir / f"{method}_estimated_solution.csv",
                             probe_t, probe_x, est_vals)
    except (SolverError, ValueError):
        pass
    ref_path = out_dir / "reference_solution.csv"
    if not ref_path.exists():
        if reference is None:
            reference = _reference_on_probe(problem, problem.eta_true, probe_t, probe_x)
        write_trajectory_csv(ref_path, probe_t, probe_x, reference)
    data_path = out_dir / "data_points.csv"
    if not data_path.exists():
        dataset.to_csv(data_path)


def _method_metrics(problem: ProblemSpec, dataset: Dataset, eta_est: np.ndarray,
                    nn_probe: np.ndarray | None, ref_probe: np.ndarray,
                    probe_t, probe_x) -> tuple[float, float, float]:
    """(gamma_abs, gamma_rel, mu) for one finished method."""
    g_abs = g_rel = mu_val = float("nan")
    try:
        ref_est = problem.solve(eta_est, np.unique(problem.obs_t))
        pred = ref_est.eval_points(problem.obs_t, problem.obs_x)
        g_abs = gamma(dataset, pred, "absolute")
        try:
            g_rel = gamma(dataset, pred, "relative")
        except ValueError:
            pass
        if nn_probe is None:
            mu_val = mu(_reference_on_probe(problem, eta_est, probe_t, probe_x), ref_probe)
    except (SolverError, ValueError):
        pass
    if nn_probe is not None:
        mu_val = mu(nn_probe, ref_probe)
    return g_abs, g_rel, mu_val


def run_cell(config: ExperimentConfig, zeta: float, xi: float, replicate: int,
             export_dir: Path | None = None) -> list[ScenarioResult]:
    """Run every configured method on one grid cell and score it.

    All methods share the cell's dataset, collocation set and network
    initialization; per-method failures are recorded in the status column
    without aborting the cell.
    """
    problem = get_problem(config.benchmark)
    data_seed, net_seed = cell_seeds(config.benchmark, zeta, xi, replicate)
    dataset = generate_dataset(problem, problem.eta_true, zeta, data_seed)
    net_spec = problem.network_spec(config.hidden_layers, config.hidden_width, config.fourier)
    params0 = init_params(net_spec, net_seed)
    n_de = config.n_de or problem.default_n_de
    colloc = build_collocation(problem, n_de, config.n_ic, config.n_bc)
    epochs = config.epochs or problem.default_epochs
    probe_t, probe_x = _probe_grid(problem, config.probe_points)
    ref_probe = _reference_on_probe(problem, problem.eta_true, probe_t, probe_x)

    rows: list[ScenarioResult] = []
    for method in config.methods:
        t0 = time.perf_counter()
        status = "ok"
        b = g_abs = g_rel = mu_val = float("nan")
        eta_est = None
        train_result: TrainResult | None = None
        try:
            if method == "nelder-mead":
                objective = forward_objective(problem, dataset)
                nm = nelder_mead(objective, (1.0 + xi) * problem.eta_true,
                                 (problem.eta_lower, problem.eta_upper))
                eta_est = nm.x
                nn_probe = None
            else:
                tc = TrainConfig(epochs=epochs, n_de=n_de, n_ic=config.n_ic,
                                 n_bc=config.n_bc, seed=net_seed, xi=xi,
                                 hidden_layers=config.hidden_layers,
                                 hidden_width=config.hidden_width, fourier=config.fourier)
                trainer = train_pinnverse if method == "pinnverse" else train_pinn
                train_result = trainer(problem, dataset, tc, params0=params0, colloc=colloc)
                if train_result.aborted:
                    status = f"aborted: {train_result.abort_reason}"
                eta_est = train_result.eta_est
                nn_probe = forward(net_spec, train_result.params, probe_x, probe_t)
            b = beta(problem.eta_true, eta_est)
            g_abs, g_rel, mu_val = _method_metrics(problem, dataset, eta_est, nn_probe,
                                                   ref_probe, probe_t, probe_x)
        except Exception as err:  # per-cell failures must not kill the grid
            status = f"error: {type(err).__name__}: {err}"
        runtime = time.perf_counter() - t0
        rows.append(ScenarioResult(method, zeta, xi, replicate, b, g_abs, g_rel,
                                   mu_val, runtime, status))
        if export_dir is not None and eta_est is not None:
            net = None if train_result is None else (net_spec, train_result.params)
            export_trajectories(export_dir, problem, method, eta_est, dataset, net,
                                probe_t, probe_x, reference=ref_probe)
            if train_result is not None:
                write_loss_log(export_dir / f"{method}_losses.csv", problem, train_result)
                train_result.save_json(export_dir / f"{method}_result.json", problem)
    return rows


def _cell_worker(args) -> list[ScenarioResult]:
    return run_cell(*args)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> Path:
    """Execute the whole grid; returns the results CSV path.

    Cells run sequentially by default or in a process pool with
    ``workers`` > 1; results stream through a single append channel.
    """
    config.validate()
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    write_results_header(results_path)
    workers = config.workers if workers is None else workers

    cells = []
    for zeta in config.zetas:
        for xi in config.xis:
            for rep in range(config.replicates):
                export = None
                if (config.highlight is not None and rep == 0
                        and abs(zeta - config.highlight[0]) < 1e-12
                        and abs(xi - config.highlight[1]) < 1e-12):
                    export = out_dir / "highlight"
                cells.append((config, zeta, xi, rep, export))

    if workers <= 1:
        for cell in cells:
            for row in _cell_worker(cell):
                append_result(results_path, row)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_cell_worker, cell) for cell in cells]
            for fut in as_completed(futures):
                for row in fut.result():
                    append_result(results_path, row)
    return results_path
