import csv
from pathlib import Path

import numpy as np
import pytest

from pinnverse.experiment import (
    ConfigError,
    ExperimentConfig,
    cell_seeds,
    parse_config_file,
    run_cell,
    run_experiment,
)
from pinnverse.metrics import RESULT_COLUMNS

CONFIG = """
[reaction]
methods = nelder-mead
zeta = 0.0
xi = 0.0
epochs = 20
n_de = 64
n_ic = 8
n_bc = 8
output_dir = {out}
"""


def _write(tmp_path, text) -> Path:
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return path


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_cell_seeds_stable_and_distinct():
    a = cell_seeds("reaction", 0.25, 0.75, 0)
    assert a == cell_seeds("reaction", 0.25, 0.75, 0)
    assert a != cell_seeds("reaction", 0.25, 0.75, 1)
    assert a != cell_seeds("burgers", 0.25, 0.75, 0)
    assert a[0] != a[1]


def test_parse_config_defaults_and_overrides(tmp_path):
    path = _write(tmp_path, CONFIG.format(out=tmp_path / "out"))
    (cfg,) = parse_config_file(path)
    assert cfg.benchmark == "reaction"
    assert cfg.methods == ("nelder-mead",)
    assert cfg.zetas == (0.0,) and cfg.xis == (0.0,)
    (cfg2,) = parse_config_file(path, overrides=["epochs=7", "zeta=0.1, 0.2"])
    assert cfg2.epochs == 7 and cfg2.zetas == (0.1, 0.2)


def test_parse_config_full_defaults(tmp_path):
    path = _write(tmp_path, "[fhn]\noutput_dir = x\n")
    (cfg,) = parse_config_file(path)
    assert cfg.zetas == (0.0, 0.05, 0.15, 0.25, 0.30)
    assert cfg.xis == (0.25, 0.75, 1.50, 5.00)
    assert cfg.methods == ("pinnverse", "pinn", "nelder-mead")
    assert cfg.epochs is None  # falls back to the benchmark default


@pytest.mark.parametrize(
    "mutation",
    [
        "[heat]\noutput_dir = x\n",
        "[reaction]\nmethods =\n",
        "[reaction]\nmethods = annealing\n",
        "[reaction]\nzeta = 0.5\n",
        "[reaction]\nxi = 9\n",
        "[reaction]\nepochs = 0\n",
        "[reaction]\nreplicates = 0\n",
        "[reaction]\nepochs = one\n",
        "[reaction]\nhighlight = 0.1\n",
    ],
)
def test_parse_config_rejects_invalid(tmp_path, mutation):
    path = _write(tmp_path, mutation)
    with pytest.raises(ConfigError):
        parse_config_file(path)


def test_missing_config_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config_file("/nonexistent/exp.ini")


def test_bad_override_format(tmp_path):
    path = _write(tmp_path, "[reaction]\noutput_dir = x\n")
    with pytest.raises(ConfigError, match="key=value"):
        parse_config_file(path, overrides=["epochs"])


def test_degenerate_start_recovery(tmp_path):
    # 1x1 grid, exact initial guess, noise-free data, simplex method
    cfg = ExperimentConfig("reaction", tmp_path / "out", methods=("nelder-mead",),
                           zetas=(0.0,), xis=(0.0,))
    path = run_experiment(cfg)
    rows = _read_rows(path)
    assert len(rows) == 1
    assert rows[0]["status"] == "ok"
    assert float(rows[0]["beta"]) < 1e-3


def test_rerun_reproduces_results_modulo_runtime(tmp_path):
    cfg = ExperimentConfig("reaction", tmp_path / "a", methods=("pinnverse", "nelder-mead"),
                           zetas=(0.05,), xis=(0.25,), epochs=25, n_de=64, n_ic=8, n_bc=8)
    rows_a = _read_rows(run_experiment(cfg))
    cfg.output_dir = tmp_path / "b"
    rows_b = _read_rows(run_experiment(cfg))
    drop = {"runtime_s"}
    for ra, rb in zip(rows_a, rows_b):
        assert {k: v for k, v in ra.items() if k not in drop} == \
               {k: v for k, v in rb.items() if k not in drop}


def test_run_cell_shares_inputs_and_survives_failures(tmp_path):
    cfg = ExperimentConfig("reaction", tmp_path, methods=("pinnverse", "pinn"),
                           zetas=(0.1,), xis=(0.75,), epochs=10, n_de=32, n_ic=8, n_bc=8)
    rows = run_cell(cfg, 0.1, 0.75, 0)
    assert [r.method for r in rows] == ["pinnverse", "pinn"]
    assert all(r.status == "ok" for r in rows)
    assert all(np.isfinite(r.beta) for r in rows)


def test_results_csv_header_order(tmp_path):
    cfg = ExperimentConfig("reaction", tmp_path / "out", methods=("nelder-mead",),
                           zetas=(0.0,), xis=(0.25,))
    path = run_experiment(cfg)
    header = path.read_text().splitlines()[0].split(",")
    assert header == RESULT_COLUMNS


def test_highlight_cell_exports_artifacts(tmp_path):
    cfg = ExperimentConfig("reaction", tmp_path / "out", methods=("pinnverse", "nelder-mead"),
                           zetas=(0.1,), xis=(0.25,), epochs=15, n_de=32, n_ic=8, n_bc=8,
                           highlight=(0.1, 0.25), probe_points=101)
    run_experiment(cfg)
    hi = tmp_path / "out" / "highlight"
    for name in ("reference_solution.csv", "data_points.csv",
                 "pinnverse_nn_prediction.csv", "pinnverse_estimated_solution.csv",
                 "pinnverse_losses.csv", "pinnverse_result.json",
                 "nelder-mead_estimated_solution.csv"):
        assert (hi / name).exists(), name
    # NN prediction rows = probe size x components (+ header)
    lines = (hi / "pinnverse_nn_prediction.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 101 * 4


def test_trajectory_export_matches_solver_passthrough(tmp_path):
    from pinnverse.experiment import _probe_grid, _reference_on_probe, write_trajectory_csv
    from pinnverse.problems import get_problem

    prob = get_problem("reaction")
    probe_t, probe_x = _probe_grid(prob, 51)
    ref = _reference_on_probe(prob, prob.eta_true, probe_t, probe_x)
    out = tmp_path / "ref.csv"
    write_trajectory_csv(out, probe_t, probe_x, ref)
    rows = np.genfromtxt(out, delimiter=",", skip_header=1)
    values = rows[:, 3].reshape(51, 4)
    direct = prob.solve(prob.eta_true, probe_t).values
    np.testing.assert_allclose(values, direct, rtol=1e-12)


def test_estimated_trajectory_at_true_parameters_matches_reference(tmp_path):
    from pinnverse.experiment import _probe_grid, _reference_on_probe
    from pinnverse.problems import get_problem

    prob = get_problem("reaction")
    probe_t, probe_x = _probe_grid(prob, 101)
    ref = _reference_on_probe(prob, prob.eta_true, probe_t, probe_x)
    est = _reference_on_probe(prob, prob.eta_true.copy(), probe_t, probe_x)
    assert np.max(np.abs(ref - est)) < 1e-10


def test_parallel_workers_produce_same_row_set(tmp_path):
    base = dict(methods=("nelder-mead",), zetas=(0.0, 0.1), xis=(0.25,))
    cfg1 = ExperimentConfig("reaction", tmp_path / "seq", **base)
    cfg2 = ExperimentConfig("reaction", tmp_path / "par", workers=2, **base)
    rows_seq = _read_rows(run_experiment(cfg1))
    rows_par = _read_rows(run_experiment(cfg2))
    key = lambda r: (r["method"], r["zeta"], r["xi"], r["seed"])
    drop = {"runtime_s"}
    assert sorted(({k: v for k, v in r.items() if k not in drop} for r in rows_seq), key=key) == \
           sorted(({k: v for k, v in r.items() if k not in drop} for r in rows_par), key=key)
