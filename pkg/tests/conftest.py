import numpy as np
import pytest

from qdwell import spectrum


@pytest.fixture(scope="session")
def deep_basis():
    """Omega=100, V0=200 well, ten levels."""
    return spectrum.diagonalize(spectrum.build_potential(100.0, 200.0), n_basis=10)


@pytest.fixture(scope="session")
def small_basis():
    """Shallow Omega=5, V0=20 well, eight levels."""
    return spectrum.diagonalize(spectrum.build_potential(5.0, 20.0), n_basis=8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_density(n, rng, rank=None):
    rank = rank or n
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
