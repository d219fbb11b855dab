import numpy as np
import pytest

from pinnverse.jets import lift_params
from pinnverse.losses import build_losses
from pinnverse.network import param_arrays
from pinnverse.tape import Tape


def loss_terms_at(problem, net_spec, params, eta, colloc, dataset):
    """Build all loss terms on a fresh tape; returns (losses, tape, param_vars, eta_var)."""
    tape = Tape()
    param_vars = lift_params(tape, params)
    eta_var = tape.leaf(np.asarray(eta, dtype=float))
    comps = [eta_var.take(j) for j in range(problem.param_dim)]
    losses = build_losses(tape, problem, net_spec, param_vars, comps, colloc, dataset)
    return losses, tape, param_vars, eta_var


def central_diff_loss(problem, net_spec, params, eta, colloc, dataset, term, h=1e-4):
    """Finite-difference gradient of one loss term w.r.t. all scalars.

    Returns a list of arrays shaped like the weights/biases plus one for
    eta. Independent of the reverse sweep: every entry comes from two
    fresh forward evaluations.
    """
    def value(p, e):
        losses, *_ = loss_terms_at(problem, net_spec, p, e, colloc, dataset)
        return float(losses[term].value)

    grads = []
    for ai, arr in enumerate(param_arrays(params)):
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            pp = params.copy()
            pp_arr = param_arrays(pp)[ai].reshape(-1)
            pp_arr[i] = orig + h
            fp = value(pp, eta)
            pp_arr[i] = orig - h
            fm = value(pp, eta)
            gflat[i] = (fp - fm) / (2 * h)
        grads.append(g)
    ge = np.zeros_like(np.asarray(eta, dtype=float))
    for j in range(ge.size):
        ep = np.array(eta, dtype=float)
        em = np.array(eta, dtype=float)
        ep[j] += h
        em[j] -= h
        ge[j] = (value(params, ep) - value(params, em)) / (2 * h)
    grads.append(ge)
    return grads


def assert_grad_close(analytic, numeric, rel_tol=1e-4, abs_floor=1e-8, abs_tol=1e-7):
    """Entrywise comparison: relative where the magnitude supports it."""
    a = np.concatenate([np.ravel(g) for g in analytic])
    n = np.concatenate([np.ravel(g) for g in numeric])
    small = np.abs(a) < abs_floor
    if np.any(small):
        np.testing.assert_allclose(a[small], n[small], atol=abs_tol)
    big = ~small
    if np.any(big):
        rel = np.abs(a[big] - n[big]) / np.abs(n[big]).clip(min=abs_floor)
        assert float(rel.max()) < rel_tol, f"max relative gradient error {rel.max():.3e}"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
