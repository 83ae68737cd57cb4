"""Observables of a reduced density matrix expressed in an energy eigenbasis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import EigenBasis

__all__ = [
    "AliasingError",
    "WignerGrid",
    "position_density",
    "p_left",
    "wigner",
    "linear_entropy",
    "mean_energy",
]


class AliasingError(ValueError):
    """The phase-space grid loses more than the allowed normalisation."""


@dataclass
class WignerGrid:
    """Wigner function sampled on a rectangular phase-space grid.

    ``values[i, j]`` is ``W(x[i], p[j])``.
    """

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    t: float | None = None

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def norm(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.dx

    def negativity(self) -> float:
        """``min W / max W``; zero or positive means no negative region."""
        return float(self.values.min() / self.values.max())


def position_density(rho, basis: EigenBasis) -> np.ndarray:
    """``sigma(x) = <x|rho|x>`` on the basis grid."""
    psi = basis.wavefunctions
    return np.einsum("jm,mn,jn->j", psi, rho, psi, optimize=True).real


def p_left(rho, basis: EigenBasis, projector=None) -> float:
    """Probability of finding the particle at ``x < 0``.

    ``projector`` may pass a precomputed :meth:`EigenBasis.left_projector`.
    """
    q = basis.left_projector() if projector is None else projector
    return float(np.real(np.sum(q * rho.T)))


def linear_entropy(rho) -> tuple[float, float]:
    """Return ``S_L = -ln Tr rho^2`` and ``S_L / ln N``."""
    purity = float(np.real(np.sum(rho * rho.T)))
    s = -math.log(purity)
    return s, s / math.log(rho.shape[0])


def mean_energy(rho, basis: EigenBasis) -> float:
    """``Tr(rho H)`` with energies measured from the barrier top."""
    return float(np.real(np.diag(rho)) @ basis.energies)


def wigner(
    rho,
    basis: EigenBasis,
    x_bins: int = 256,
    p_max: float | None = None,
    x_range: tuple[float, float] | None = None,
    pad: int = 2,
    t: float | None = None,
    max_drift: float = 1e-3,
) -> WignerGrid:
    """Wigner function ``W(x, p) = (1/pi) int dy exp(2ipy) rho(x - y, x + y)``.

    The relative coordinate ``y`` runs over multiples of the basis grid
    spacing, so ``x +- y`` always hit stored samples; the ``y`` transform is an
    FFT zero-padded by ``pad`` and the momentum axis is the native FFT grid
    cropped to ``|p| <= p_max``.

    Parameters
    ----------
    x_bins : int
        Number of output positions, taken as an even stride through the grid
        points inside ``x_range`` (default: the two wells, ``[-2 x0, 2 x0]``).
    p_max : float, optional
        Defaults to 1.5 times the largest classical momentum allowed by the
        highest basis energy.

    Raises
    ------
    AliasingError
        If the cropped grid loses more than ``max_drift`` of ``Tr rho``.
    """
    pot = basis.potential
    grid = basis.grid
    h = basis.dx
    npts = len(grid)
    if x_range is None:
        x_range = (-2.0 * pot.x0, 2.0 * pot.x0)
    if p_max is None:
        p_max = 1.5 * math.sqrt(2.0 * (pot.v0 + abs(basis.energies.max())))
    inside = np.flatnonzero((grid >= x_range[0]) & (grid <= x_range[1]))
    stride = max(1, len(inside) // x_bins)
    rows = inside[::stride][:x_bins]

    length = 1 << int(math.ceil(math.log2(pad * npts)))
    freqs = np.fft.fftfreq(length, d=h)
    p_all = math.pi * freqs
    keep = np.abs(p_all) <= p_max
    order = np.argsort(p_all[keep])
    p = p_all[keep][order]

    psi = basis.wavefunctions
    phi = psi @ rho
    values = np.empty((len(rows), len(p)))
    buf = np.zeros(length, dtype=complex)
    for i, j in enumerate(rows):
        k = min(j, npts - 1 - j)
        shifts = np.arange(-k, k + 1)
        # rho(x - y, x + y) with y = s h
        r = np.einsum("sm,sm->s", phi[j - shifts], psi[j + shifts])
        buf[:] = 0.0
        buf[shifts % length] = r
        # exp(2ipy) with p = pi f and y = s h gives exp(2 pi i f s h), an inverse FFT
        spec = np.fft.ifft(buf) * length
        values[i] = (spec.real[keep][order]) * h / math.pi

    out = WignerGrid(grid[rows], p, values, t)
    trace = float(np.real(np.trace(rho)))
    inner = float(np.real(np.sum(position_density(rho, basis)[rows[0]:rows[-1] + 1]) * h))
    drift = abs(out.norm() - inner) / max(abs(trace), 1e-300)
    if drift > max_drift:
        raise AliasingError(f"Wigner normalisation drift {drift:.2e} exceeds {max_drift:.1e}")
    return out
