import numpy as np
import pytest

from pinnverse.losses import data_loss
from pinnverse.metrics import ScenarioResult, beta, fit_power_law, gamma, mu
from pinnverse.problems import Dataset
from pinnverse.tape import Tape


def _dataset(values):
    values = np.asarray(values, dtype=float)
    return Dataset(np.arange(len(values), dtype=float), None, values,
                   np.zeros_like(values), 0.0, 0)


def test_beta_zero_at_exact_recovery():
    assert beta([1.5, 0.5, 1.0, 0.1], [1.5, 0.5, 1.0, 0.1]) == 0.0


def test_beta_doubling_single_parameter():
    assert beta([2.0], [4.0]) == pytest.approx(1.0)


def test_beta_hand_value_on_reaction_truth():
    assert beta([1.5, 0.5, 1.0, 0.1], [1.5, 0.5, 1.0, 0.2]) == pytest.approx(0.5)


def test_beta_guards():
    with pytest.raises(ValueError):
        beta([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        beta([1.0], [1.0, 2.0])


def test_beta_permutation_invariant(rng):
    true = rng.uniform(0.5, 2.0, size=6)
    est = true * rng.uniform(0.8, 1.2, size=6)
    perm = rng.permutation(6)
    assert beta(true, est) == pytest.approx(beta(true[perm], est[perm]))


def test_gamma_zero_at_exact_prediction():
    ds = _dataset([[1.0], [2.0]])
    assert gamma(ds, [[1.0], [2.0]], "absolute") == 0.0


def test_gamma_hand_values():
    ds = _dataset([[2.0]])
    assert gamma(ds, [[1.0]], "absolute") == pytest.approx(1.0)
    assert gamma(ds, [[1.0]], "relative") == pytest.approx(0.5)


def test_gamma_zero_datum_guard():
    ds = _dataset([[0.0]])
    with pytest.raises(ValueError):
        gamma(ds, [[1.0]], "relative")


def test_gamma_matches_data_loss_definition(rng):
    values = rng.uniform(0.5, 2.0, size=(7, 3))
    pred = values + rng.normal(scale=0.1, size=values.shape)
    ds = Dataset(np.arange(7.0), None, values, np.zeros_like(values), 0.0, 0)
    for kind in ("absolute", "relative"):
        tape = Tape()
        loss = data_loss(tape.leaf(pred), values, kind)
        assert gamma(ds, pred, kind) == pytest.approx(float(loss.value), rel=1e-15)


def test_mu_basics(rng):
    ref = rng.normal(size=(11, 2))
    assert mu(ref, ref) == 0.0
    assert mu(ref + 0.3, ref) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        mu(ref, ref[:5])


def test_mu_monotone_under_probe_refinement():
    t_coarse = np.linspace(0, 1, 101)
    t_fine = np.linspace(0, 1, 201)  # superset of the coarse grid
    f = lambda t: np.sin(2 * np.pi * t)[:, None]
    g = lambda t: (np.sin(2 * np.pi * t) + 0.1 * np.sin(9 * np.pi * t))[:, None]
    assert mu(f(t_fine), g(t_fine)) >= mu(f(t_coarse), g(t_coarse))


def test_power_law_exact():
    epochs = np.arange(1, 5001)
    a, se = fit_power_law(epochs**-1.5, burn_in=1000)
    assert a == pytest.approx(1.5, abs=1e-10)
    assert se == pytest.approx(0.0, abs=1e-10)


def test_power_law_constant_loss():
    a, se = fit_power_law(np.full(3000, 0.7), burn_in=1000)
    assert a == pytest.approx(0.0, abs=1e-12)


def test_power_law_noisy_monte_carlo(rng):
    epochs = np.arange(1, 20_001)
    noise = 1.0 + 0.01 * rng.standard_normal(epochs.size)
    a, se = fit_power_law(3.0 * epochs**-1.3 * noise, burn_in=1000)
    assert 1.25 <= a <= 1.35
    assert se < 0.01


def test_power_law_scale_invariant(rng):
    losses = np.arange(1, 4001) ** -1.1 * (1 + 0.005 * rng.standard_normal(4000))
    a1, _ = fit_power_law(losses, burn_in=500)
    a2, _ = fit_power_law(7.3 * losses, burn_in=500)
    assert a1 == pytest.approx(a2, rel=1e-12)


def test_power_law_drops_nonpositive_with_warning():
    losses = np.arange(1, 3001, dtype=float) ** -1.0
    losses[1500] = 0.0
    with pytest.warns(UserWarning, match="non-positive"):
        a, _ = fit_power_law(losses, burn_in=1000)
    assert a == pytest.approx(1.0, abs=1e-6)


def test_power_law_window_guard():
    with pytest.raises(ValueError):
        fit_power_law(np.ones(500), burn_in=1000)


def test_scenario_result_row_order():
    row = ScenarioResult("pinnverse", 0.25, 0.75, 3, 0.01, 0.02, 0.03, 0.04, 1.5).row()
    assert row[0] == "pinnverse"
    assert row[-1] == "ok"
    assert len(row) == 10
