import warnings

import numpy as np
import pytest
from scipy.stats import qmc

from pinnverse.problems import burgers, fisher_kpp, reaction
from pinnverse.sampling import build_collocation, sobol


def _scipy_sobol(dim, n, skip):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        eng = qmc.Sobol(d=dim, scramble=False)
        return eng.random(n + skip)[skip:]


def test_first_points_dimension_one():
    np.testing.assert_array_equal(sobol(1, 1)[:, 0], [0.5])
    np.testing.assert_array_equal(sobol(1, 3)[:, 0], [0.5, 0.75, 0.25])


def test_matches_reference_implementation():
    for dim in (1, 2):
        for skip in (0, 1, 7):
            ours = sobol(dim, 64, skip)
            ref = _scipy_sobol(dim, 64, skip)
            np.testing.assert_array_equal(ours, ref)


def test_points_stay_in_unit_cube():
    pts = sobol(2, 512)
    assert np.all(pts >= 0.0) and np.all(pts < 1.0)


def test_dimension_guard():
    with pytest.raises(ValueError):
        sobol(3, 4)


def test_ode_collocation_layout():
    prob = reaction()
    c = build_collocation(prob, 256, 32, 32)
    assert c.interior_x is None and c.bc_t is None
    assert np.all((c.interior_t > 0.0) & (c.interior_t < prob.t_final))
    np.testing.assert_array_equal(c.ic_t, np.zeros(32))
    assert c.n_de == 256 and c.n_ic == 32 and c.n_bc == 0


def test_pde_collocation_layout():
    prob = burgers()
    c = build_collocation(prob, 512, 64, 1024)
    assert np.all((c.interior_x > -1.0) & (c.interior_x < 1.0))
    assert np.all((c.interior_t > 0.0) & (c.interior_t < prob.t_final))
    np.testing.assert_array_equal(c.ic_t, np.zeros(64))
    # BC times split evenly between the two faces
    assert np.sum(c.bc_x == -1.0) == 512 and np.sum(c.bc_x == 1.0) == 512
    # faces draw different time blocks of the sequence
    assert not np.array_equal(c.bc_t[:512], c.bc_t[512:])


def test_collocation_deterministic_and_seed_free():
    prob = fisher_kpp()
    a = build_collocation(prob, 128, 16, 16, seed=0)
    b = build_collocation(prob, 128, 16, 16, seed=999)
    np.testing.assert_array_equal(a.interior_x, b.interior_x)
    np.testing.assert_array_equal(a.interior_t, b.interior_t)


def test_default_counts_come_from_problem():
    c = build_collocation(reaction())
    assert c.n_de == reaction().default_n_de


def test_count_validation():
    with pytest.raises(ValueError):
        build_collocation(reaction(), 0)
    with pytest.raises(ValueError):
        build_collocation(burgers(), 16, 16, 0)


def test_affine_map_preserves_low_discrepancy():
    prob = burgers()
    c = build_collocation(prob, 1024, 16, 16)
    # rescale the mapped cloud back to the unit square
    unit = np.column_stack([
        (c.interior_x - (-1.0)) / 2.0,
        c.interior_t / prob.t_final,
    ])
    d_sobol = qmc.discrepancy(unit, method="L2-star")
    d_random = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        d_random.append(qmc.discrepancy(rng.random((1024, 2)), method="L2-star"))
    assert d_sobol < np.median(d_random)
