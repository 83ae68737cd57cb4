import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdwell import spectrum


def oscillator_basis_levels(omega, v0, n=400, keep=6, w=None):
    """Independent oracle: diagonalise in a harmonic-oscillator basis."""
    pot = spectrum.build_potential(omega, v0)
    w = w or 2.0 * omega
    k = np.sqrt(np.arange(1, n + 40))
    x = (np.diag(k, 1) + np.diag(k, -1)) / math.sqrt(2 * w)
    p2 = -(np.diag(k, 1) - np.diag(k, -1)) @ (np.diag(k, 1) - np.diag(k, -1)) * w / 2
    x2 = x @ x
    h = 0.5 * p2 - 0.25 * omega**2 * x2 + pot.lam * x2 @ x2
    return np.linalg.eigvalsh(h[:n, :n])[:keep]


def test_potential_geometry():
    pot = spectrum.build_potential(100.0, 200.0)
    assert pot.x0 == pytest.approx(100 / math.sqrt(8 * pot.lam))
    assert pot(pot.x0) == pytest.approx(-200.0)
    assert pot(0.0) == 0.0
    assert pot.n_states == 2.0
    with pytest.raises(ValueError):
        spectrum.build_potential(-1.0, 3.0)


def test_levels_match_oscillator_basis(deep_basis):
    ref = oscillator_basis_levels(100.0, 200.0)
    np.testing.assert_allclose(deep_basis.energies[:6], ref, rtol=1e-9)
    assert deep_basis.splitting == pytest.approx(ref[1] - ref[0], rel=1e-6)


def test_parity_structure(deep_basis):
    b = deep_basis
    np.testing.assert_array_equal(b.parities[:4], [1, -1, 1, -1])
    same = b.parities[:, None] == b.parities[None, :]
    assert np.all(b.x_matrix[same] == 0)
    np.testing.assert_array_equal(b.x_matrix, b.x_matrix.T)
    gram = b.wavefunctions.T @ b.wavefunctions * b.dx
    np.testing.assert_allclose(gram, np.eye(b.n_basis), atol=1e-10)


def test_left_projector_properties(deep_basis):
    q = deep_basis.left_projector()
    np.testing.assert_allclose(q, q.T)
    # Q + Q_right = identity on the basis
    right = deep_basis.wavefunctions[deep_basis.grid > 0]
    np.testing.assert_allclose(q + right.T @ right * deep_basis.dx, np.eye(deep_basis.n_basis), atol=1e-10)


def test_initial_state_localised(deep_basis):
    st0 = spectrum.project_initial_state(deep_basis, "left")
    rho = st0.density_matrix()
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.real(np.sum(deep_basis.left_projector() * rho.T)) > 0.999
    right = spectrum.project_initial_state(deep_basis, "right")
    np.testing.assert_allclose(np.abs(right.coefficients), np.abs(st0.coefficients), atol=1e-12)
    with pytest.raises(ValueError):
        spectrum.project_initial_state(deep_basis.truncated(2), "left")


def test_tunneling_time_and_instanton(deep_basis):
    assert spectrum.tunneling_time(deep_basis) == pytest.approx(158.27, rel=0.02)
    closed = 3 / 8 * math.sqrt(math.pi / 2 * 100 / 200) / 100 * math.exp(16 / 3 * 2)
    assert spectrum.instanton_estimate(deep_basis.potential) == pytest.approx(closed, rel=1e-12)


def test_precision_guard():
    b = spectrum.diagonalize(spectrum.build_potential(5.0, 100.0), n_basis=4)
    with pytest.raises(spectrum.PrecisionError):
        spectrum.tunneling_time(b)


def test_grid_convergence():
    worst = spectrum.check_convergence(spectrum.build_potential(100.0, 200.0), n_basis=6, rtol=1e-8)
    assert worst < 1e-8
    with pytest.raises(spectrum.ConvergenceError):
        spectrum.check_convergence(spectrum.build_potential(100.0, 200.0), spectrum.GridSpec(1024, stencil_order=2),
                                   n_basis=6, rtol=1e-14)


def test_extended_precision_agrees():
    pot = spectrum.build_potential(100.0, 200.0)
    d = spectrum.diagonalize(pot, n_basis=4)
    e = spectrum.diagonalize(pot, n_basis=4, precision="extended")
    assert e.noise_floor < d.noise_floor
    assert e.splitting == pytest.approx(d.splitting, rel=1e-8)


def test_truncated(deep_basis):
    t = deep_basis.truncated(4)
    assert t.n_basis == 4
    np.testing.assert_array_equal(t.x_matrix, deep_basis.x_matrix[:4, :4])


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=1.0, max_value=3.0), st.floats(min_value=5.0, max_value=50.0))
def test_scale_covariance(ratio, omega):
    # energies scale with omega at fixed v0/omega
    a = spectrum.diagonalize(spectrum.build_potential(omega, ratio * omega), n_basis=4)
    b = spectrum.diagonalize(spectrum.build_potential(2 * omega, 2 * ratio * omega), n_basis=4)
    np.testing.assert_allclose(b.energies, 2 * a.energies, rtol=1e-7, atol=1e-7 * omega)
