import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import minimize as scipy_minimize

from pinnverse.baselines import forward_objective, nelder_mead, train_pinn
from pinnverse.mdmm import TrainConfig, train_pinnverse
from pinnverse.network import init_params
from pinnverse.problems import burgers, generate_dataset, reaction
from pinnverse.sampling import build_collocation

BIG = (np.full(2, -1e6), np.full(2, 1e6))


def test_quadratic_1d():
    res = nelder_mead(lambda x: (x[0] - 2.0) ** 2, np.zeros(1),
                      (np.array([-10.0]), np.array([10.0])))
    assert res.converged
    assert res.x[0] == pytest.approx(2.0, abs=1e-6)


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_rosenbrock():
    res = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), BIG)
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)
    assert res.converged and res.n_eval > 0


def test_agrees_with_library_optimizer():
    ours = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), BIG)
    theirs = scipy_minimize(rosenbrock, np.array([-1.2, 1.0]), method="Nelder-Mead",
                            options={"xatol": 1e-8, "fatol": 1e-8, "maxiter": 800})
    np.testing.assert_allclose(ours.x, theirs.x, atol=1e-5)


def test_never_evaluates_or_returns_out_of_bounds():
    lower, upper = np.array([0.0, 0.0]), np.array([1.5, 1.5])
    seen = []

    def f(x):
        seen.append(x.copy())
        return rosenbrock(x)

    res = nelder_mead(f, np.array([0.2, 1.4]), (lower, upper))
    pts = np.asarray(seen)
    assert np.all(pts >= lower - 1e-15) and np.all(pts <= upper + 1e-15)
    assert np.all(res.x >= lower) and np.all(res.x <= upper)
    assert res.fun <= rosenbrock(np.array([0.2, 1.4]))


def test_interior_bounded_search_reaches_optimum():
    res = nelder_mead(rosenbrock, np.array([0.5, 0.5]),
                      (np.array([0.0, 0.0]), np.array([1.5, 1.5])))
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)


def test_clipping_actually_binds():
    res = nelder_mead(lambda x: (x[0] - 5.0) ** 2, np.array([0.5]),
                      (np.array([0.0]), np.array([1.0])))
    assert res.x[0] == pytest.approx(1.0, abs=1e-8)


def test_nonfinite_objective_treated_as_worst():
    def f(x):
        return np.nan if x[0] < 0 else (x[0] - 0.5) ** 2

    res = nelder_mead(f, np.array([0.9]), (np.array([-5.0]), np.array([5.0])))
    assert res.x[0] == pytest.approx(0.5, abs=1e-6)


def test_iteration_cap_respected():
    calls = []

    def f(x):
        calls.append(1)
        return float(np.sum(x * x))

    res = nelder_mead(f, np.full(3, 50.0), (np.full(3, -100.0), np.full(3, 100.0)),
                      options={"maxiter": 5})
    assert res.n_iter <= 5 and not res.converged


def test_unknown_option_rejected():
    with pytest.raises(ValueError):
        nelder_mead(rosenbrock, np.zeros(2), BIG, options={"tol": 1e-3})


def test_forward_objective_zero_at_truth_noise_free():
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.0, 1)
    obj = forward_objective(prob, ds)
    assert obj(prob.eta_true) < 1e-6


def test_forward_objective_deterministic():
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.1, 4)
    obj = forward_objective(prob, ds)
    eta = prob.eta_true * 1.3
    assert obj(eta) == obj(eta)


def test_forward_objective_matches_straight_line_script():
    # independent route: scipy integrator + handwritten relative RMS
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.25, 11)
    obj = forward_objective(prob, ds)
    eta = np.array([1.1, 0.7, 0.9, 0.2])

    sol = solve_ivp(lambda t, y: prob.rhs(t, y, eta), (0, 10), prob.initial_state(),
                    t_eval=prob.obs_t, rtol=1e-11, atol=1e-13)
    rel = (sol.y.T - ds.values) / ds.values
    expect = np.sqrt(np.mean(rel**2))
    assert obj(eta) == pytest.approx(expect, rel=1e-7)


def test_forward_objective_infinite_on_solver_failure():
    prob = burgers()
    ds = generate_dataset(prob, prob.eta_true, 0.0, 1)
    obj = forward_objective(prob, ds)
    assert obj(np.array([0.0])) == np.inf


def test_nelder_mead_recovers_reaction_parameters():
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.0, 5)
    obj = forward_objective(prob, ds)
    res = nelder_mead(obj, 1.10 * prob.eta_true, (prob.eta_lower, prob.eta_upper))
    rel = np.abs(res.x - prob.eta_true) / prob.eta_true
    assert np.max(rel) < 1e-3


def test_train_pinn_reports_positive_parameters():
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.25, 6)
    cfg = TrainConfig(epochs=30, n_de=64, n_ic=16, n_bc=16, seed=2, xi=0.75)
    res = train_pinn(prob, ds, cfg)
    assert np.all(res.eta_est > 0.0)
    assert res.loss_log.shape == (30, 4)
    assert res.method == "pinn"
    np.testing.assert_array_equal(res.multiplier_log, 0.0)


def test_controlled_comparison_shares_first_iterate():
    # same seeds, collocation, dataset: both trainers must see identical
    # losses at the initial iterate (they differ only in the update rule)
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.1, 9)
    spec = prob.network_spec()
    params0 = init_params(spec, 13)
    colloc = build_collocation(prob, 64, 16, 16)
    cfg = TrainConfig(epochs=3, n_de=64, n_ic=16, n_bc=16, seed=13, xi=0.75)
    a = train_pinnverse(prob, ds, cfg, params0=params0, colloc=colloc)
    b = train_pinn(prob, ds, cfg, params0=params0, colloc=colloc)
    np.testing.assert_allclose(a.loss_log[0], b.loss_log[0], rtol=1e-12)


def test_train_pinn_rejects_nonpositive_start():
    prob = reaction()
    ds = generate_dataset(prob, prob.eta_true, 0.0, 1)
    cfg = TrainConfig(epochs=2, n_de=16, n_ic=4, n_bc=4,
                      eta_start=np.array([1.0, -0.5, 1.0, 0.1]))
    with pytest.raises(ValueError, match="positive"):
        train_pinn(prob, ds, cfg)
