import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdwell import observables, spectrum

from conftest import random_density


def test_p_left_of_localised_and_parity_states(deep_basis):
    rho = spectrum.project_initial_state(deep_basis, "left").density_matrix()
    assert observables.p_left(rho, deep_basis) > 0.999
    ground = np.zeros((deep_basis.n_basis,) * 2, dtype=complex)
    ground[0, 0] = 1
    assert observables.p_left(ground, deep_basis) == pytest.approx(0.5, abs=1e-12)


def test_linear_entropy_bounds():
    s, r = observables.linear_entropy(np.diag([1.0, 0, 0, 0]))
    assert s == pytest.approx(0.0, abs=1e-15) and r == pytest.approx(0.0, abs=1e-15)
    s, r = observables.linear_entropy(np.eye(4) / 4)
    assert s == pytest.approx(np.log(4)) and r == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31))
def test_entropy_ratio_in_unit_interval(n, seed):
    rho = random_density(n, np.random.default_rng(seed))
    s, r = observables.linear_entropy(rho)
    assert -1e-12 <= r <= 1 + 1e-12


def test_mean_energy(deep_basis, rng):
    rho = random_density(deep_basis.n_basis, rng)
    assert observables.mean_energy(rho, deep_basis) == pytest.approx(np.real(np.trace(np.diag(deep_basis.energies) @ rho)))


def test_position_density_normalised(deep_basis, rng):
    rho = random_density(deep_basis.n_basis, rng)
    dens = observables.position_density(rho, deep_basis)
    assert np.sum(dens) * deep_basis.dx == pytest.approx(1.0, abs=1e-10)
    assert np.all(dens > -1e-12)


def test_wigner_marginals_and_positivity(deep_basis):
    rho = spectrum.project_initial_state(deep_basis, "left").density_matrix()
    w = observables.wigner(rho, deep_basis, t=0.0)
    assert w.norm() == pytest.approx(1.0, abs=1e-4)
    # truncation to ten levels leaves only faint ripples
    assert w.negativity() > -1e-2
    xm = w.x_marginal()
    dens = np.interp(w.x, deep_basis.grid, observables.position_density(rho, deep_basis))
    np.testing.assert_allclose(xm, dens, atol=2e-3 * dens.max())
    # packet sits in the left well with zero mean momentum
    assert np.sum(w.x * xm) * w.dx == pytest.approx(-deep_basis.potential.x0, rel=0.02)
    assert abs(np.sum(w.p * w.p_marginal()) * w.dp) < 1e-6


def test_wigner_detects_cat_interference(deep_basis):
    c = np.zeros(deep_basis.n_basis, dtype=complex)
    c[0] = 1.0
    rho = np.outer(c, c)
    w = observables.wigner(rho, deep_basis)
    # the ground doublet member is an even cat; fringes at x = 0 go negative
    assert w.values.min() < -0.1 * w.values.max()


def test_wigner_aliasing_guard(deep_basis):
    rho = np.eye(deep_basis.n_basis, dtype=complex) / deep_basis.n_basis
    with pytest.raises(observables.AliasingError):
        observables.wigner(rho, deep_basis, p_max=1.0)
