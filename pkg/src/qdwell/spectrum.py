"""Double-well potential, isolated-system eigenbasis and tunneling times.

The Hamiltonian ``H = p^2/2 + V(x)`` with ``V(x) = -Omega^2 x^2/4 + lambda x^4``
is discretised on a cell-centred grid that is symmetric about ``x = 0``.  Because
no grid point sits on the origin, the reflection ``x -> -x`` maps the grid onto
itself and the finite-difference Hamiltonian splits exactly into an even and an
odd block on the half line.  Each block is solved on its own so the tunnel
splitting ``E1 - E0`` is the difference of two independently well-conditioned
eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

__all__ = [
    "PotentialSpec",
    "GridSpec",
    "EigenBasis",
    "InitialState",
    "ConvergenceError",
    "PrecisionError",
    "build_potential",
    "diagonalize",
    "project_initial_state",
    "tunneling_time",
    "instanton_action",
    "instanton_estimate",
    "check_convergence",
]

# central second-derivative stencils, coefficient of f(x + m h) for m = 0..p
_STENCILS = {
    2: (-2.0, 1.0),
    4: (-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0),
    6: (-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0),
    8: (-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0),
}


class ConvergenceError(RuntimeError):
    """Eigenvalues moved more than the tolerance under grid refinement."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (achieved relative change {residual:.3e})")
        self.residual = residual


class PrecisionError(ArithmeticError):
    """A quantity is below the numerical noise floor of the eigensolve."""


@dataclass(frozen=True)
class PotentialSpec:
    """Parameters of ``V(x) = -Omega^2 x^2 / 4 + lambda x^4``.

    Energies are measured from the barrier top, so ``V(0) = 0`` and the two
    minima sit at ``V(+-x0) = -v0``.
    """

    omega: float
    lam: float

    @property
    def x0(self) -> float:
        return self.omega / math.sqrt(8.0 * self.lam)

    @property
    def v0(self) -> float:
        return self.omega**4 / (64.0 * self.lam)

    @property
    def n_states(self) -> float:
        """Semiclassical number of levels per well, ``v0 / omega``."""
        return self.v0 / self.omega

    def __call__(self, x):
        x = np.asarray(x)
        return -0.25 * self.omega**2 * x * x + self.lam * x**4

    def force_coefficients(self) -> tuple[float, float]:
        """``(k1, k3)`` with ``V'(x) = k1 x + k3 x^3``."""
        return -0.5 * self.omega**2, 4.0 * self.lam

    def curvature(self, x):
        return -0.5 * self.omega**2 + 12.0 * self.lam * np.asarray(x) ** 2


def build_potential(omega: float, v0: float) -> PotentialSpec:
    """Double well with natural frequency ``omega`` and barrier height ``v0``."""
    if not (omega > 0 and v0 > 0):
        raise ValueError(f"omega and v0 must be positive, got omega={omega}, v0={v0}")
    return PotentialSpec(omega=float(omega), lam=omega**4 / (64.0 * v0))


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centred grid on ``[-half_width, half_width]``.

    ``half_width`` defaults to three times the well position of whatever
    potential the grid is used with.
    """

    points: int = 4096
    half_width: float | None = None
    stencil_order: int = 6

    def resolve(self, potential: PotentialSpec) -> tuple[np.ndarray, float]:
        if self.points % 2 or self.points < 1024:
            raise ValueError("grid needs an even number of points, at least 1024")
        if self.stencil_order not in _STENCILS:
            raise ValueError(f"stencil_order must be one of {sorted(_STENCILS)}")
        half = 3.0 * potential.x0 if self.half_width is None else float(self.half_width)
        if half < 3.0 * potential.x0 * (1 - 1e-12):
            raise ValueError("grid must span at least [-3 x0, 3 x0]")
        h = 2.0 * half / self.points
        x = -half + (np.arange(self.points) + 0.5) * h
        return x, h

    def refined(self) -> "GridSpec":
        return GridSpec(2 * self.points, self.half_width, self.stencil_order)


@dataclass
class EigenBasis:
    """Lowest ``n_basis`` eigenstates of the isolated double well.

    ``wavefunctions[j, mu]`` samples state ``mu`` at ``grid[j]`` and is
    normalised so that ``sum(psi**2) * dx == 1``.
    """

    potential: PotentialSpec
    energies: np.ndarray
    grid: np.ndarray
    dx: float
    wavefunctions: np.ndarray
    x_matrix: np.ndarray
    parities: np.ndarray
    noise_floor: float
    precision: str = "double"
    energies_ext: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_basis(self) -> int:
        return len(self.energies)

    @property
    def delta(self) -> np.ndarray:
        """Bohr frequencies ``Delta[a, b] = E_a - E_b``."""
        e = self.energies_ext if self.energies_ext is not None else self.energies
        return (e[:, None] - e[None, :]).astype(float)

    @property
    def splitting(self) -> float:
        e = self.energies_ext if self.energies_ext is not None else self.energies
        return float(e[1] - e[0])

    def left_projector(self) -> np.ndarray:
        """Matrix ``Q[mu, nu] = int_{x<0} psi_mu psi_nu dx``."""
        left = self.grid < 0
        psi = self.wavefunctions[left]
        return psi.T @ psi * self.dx

    def truncated(self, n: int) -> "EigenBasis":
        """The first ``n`` states of this basis."""
        if n > self.n_basis:
            raise ValueError(f"basis holds only {self.n_basis} states")
        ext = None if self.energies_ext is None else self.energies_ext[:n]
        return EigenBasis(
            self.potential, self.energies[:n], self.grid, self.dx,
            self.wavefunctions[:, :n], self.x_matrix[:n, :n], self.parities[:n],
            self.noise_floor, self.precision, ext,
        )


@dataclass
class InitialState:
    """Gaussian packet in one well, expanded in an :class:`EigenBasis`."""

    side: str
    center: float
    width: float
    coefficients: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def density_matrix(self) -> np.ndarray:
        c = self.coefficients / self.norm
        return np.outer(c, c.conj()).astype(complex)


def _sector_matrix(v_half, h, order, sign, dtype=float):
    """Sparse half-line Hamiltonian for one parity sector."""
    coeffs = np.asarray(_STENCILS[order], dtype=dtype)
    m_pts = len(v_half)
    scale = -1.0 / (2.0 * h * h)
    diags = [v_half + scale * coeffs[0]]
    offsets = [0]
    for m in range(1, len(coeffs)):
        band = np.full(m_pts - m, scale * coeffs[m])
        diags += [band, band]
        offsets += [m, -m]
    mat = sp.diags(diags, offsets, format="lil")
    # reflection through x = 0: the neighbour j - m < 0 is the mirror of m - j - 1
    for m in range(1, len(coeffs)):
        for j in range(m):
            mat[j, m - j - 1] += sign * scale * coeffs[m]
    return mat.tocsc()


def _sector_matvec(vec, v_half, h, order, sign):
    """``H @ vec`` for one sector, evaluated in the dtype of ``vec``."""
    coeffs = np.asarray(_STENCILS[order], dtype=vec.dtype)
    p = len(coeffs) - 1
    one = vec.dtype.type(1)
    padded = np.concatenate([sign * vec[:p][::-1], vec, np.zeros(p, dtype=vec.dtype)])
    lap = coeffs[0] * vec
    n = len(vec)
    for m in range(1, p + 1):
        lap = lap + coeffs[m] * (padded[p + m : p + m + n] + padded[p - m : p - m + n])
    return v_half * vec - lap * (one / (2 * h * h))


def _solve_sector(v_half, h, order, sign, k, sigma):
    mat = _sector_matrix(v_half, h, order, sign)
    k = min(k, len(v_half) - 2)
    vals, vecs = eigsh(mat, k=k, sigma=sigma, which="LM", tol=0)
    idx = np.argsort(vals)
    return vals[idx], vecs[:, idx]


def diagonalize(
    potential: PotentialSpec,
    grid: GridSpec | None = None,
    n_basis: int = 40,
    precision: str = "double",
) -> EigenBasis:
    """Lowest ``n_basis`` eigenstates of the double well.

    Parameters
    ----------
    potential : PotentialSpec
    grid : GridSpec, optional
        Defaults to 4096 points on ``[-3 x0, 3 x0]`` with a sixth-order stencil.
    n_basis : int
    precision : {"double", "extended"}
        ``"extended"`` refines every eigenvalue by a Rayleigh quotient evaluated
        in ``numpy.longdouble``.  This lowers the noise floor of the tunnel
        splitting by roughly three orders of magnitude on x86 hardware.
    """
    grid = grid or GridSpec()
    if precision not in ("double", "extended"):
        raise ValueError("precision must be 'double' or 'extended'")
    x, h = grid.resolve(potential)
    if n_basis < 2 or n_basis > grid.points // 4:
        raise ValueError("need 2 <= n_basis <= points/4")
    half = grid.points // 2
    x_half = x[half:]
    v_half = potential(x_half)
    sigma = -potential.v0 - potential.omega
    k_sector = n_basis // 2 + 2

    energies, ext, parities, columns = [], [], [], []
    for sign in (1, -1):
        vals, vecs = _solve_sector(v_half, h, grid.stencil_order, sign, k_sector, sigma)
        for val, vec in zip(vals, vecs.T):
            if precision == "extended":
                xl = x_half.astype(np.longdouble)
                vl = potential.lam * xl**4 - np.longdouble(potential.omega) ** 2 * xl * xl / 4
                ul = vec.astype(np.longdouble)
                hv = _sector_matvec(ul, vl, np.longdouble(h), grid.stencil_order, sign)
                ext.append(np.dot(ul, hv) / np.dot(ul, ul))
            full = np.concatenate([sign * vec[::-1], vec])
            full /= math.sqrt(np.dot(full, full) * h)
            right = full[half:]
            if right[np.argmax(np.abs(right))] < 0:
                full = -full
            energies.append(val)
            parities.append(sign)
            columns.append(full)

    order = np.argsort(energies, kind="stable")[:n_basis]
    energies = np.asarray(energies)[order]
    parities = np.asarray(parities)[order]
    psi = np.column_stack([columns[i] for i in order])
    energies_ext = np.asarray(ext, dtype=np.longdouble)[order] if ext else None
    if energies_ext is not None:
        energies = energies_ext.astype(float)

    x_matrix = psi.T @ (x[:, None] * psi) * h
    same = parities[:, None] == parities[None, :]
    x_matrix[same] = 0.0
    x_matrix = 0.5 * (x_matrix + x_matrix.T)

    coeff_sum = sum(abs(c) for c in _STENCILS[grid.stencil_order]) * 2
    h_norm = float(np.max(np.abs(v_half))) + coeff_sum / (2 * h * h)
    eps = np.finfo(np.longdouble if precision == "extended" else float).eps
    return EigenBasis(
        potential=potential,
        energies=energies,
        grid=x,
        dx=h,
        wavefunctions=psi,
        x_matrix=x_matrix,
        parities=parities,
        noise_floor=float(eps) * h_norm,
        precision=precision,
        energies_ext=energies_ext,
    )


def check_convergence(
    potential: PotentialSpec,
    grid: GridSpec | None = None,
    n_basis: int = 10,
    rtol: float = 1e-8,
) -> float:
    """Compare eigenvalues against a grid with twice the points.

    Returns the largest relative change; raises :class:`ConvergenceError`
    when it exceeds ``rtol``.
    """
    grid = grid or GridSpec()
    coarse = diagonalize(potential, grid, n_basis)
    fine = diagonalize(potential, grid.refined(), n_basis)
    change = np.abs(fine.energies - coarse.energies) / np.maximum(np.abs(fine.energies), potential.omega)
    worst = float(change.max())
    if worst > rtol:
        raise ConvergenceError("eigenvalues not converged under grid doubling", worst)
    return worst


def project_initial_state(basis: EigenBasis, side: str = "left") -> InitialState:
    """Expand the harmonic-vacuum Gaussian sitting in one well.

    The packet has width ``sigma_x = 1/sqrt(2 Omega)``; coefficients are grid
    quadratures ``c_mu = <mu|Psi0>``.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    pot = basis.potential
    center = -pot.x0 if side == "left" else pot.x0
    width = 1.0 / math.sqrt(2.0 * pot.omega)
    psi0 = (2 * math.pi * width**2) ** -0.25 * np.exp(-((basis.grid - center) ** 2) / (4 * width**2))
    coeffs = basis.wavefunctions.T @ psi0 * basis.dx
    state = InitialState(side, center, width, coeffs)
    if 1.0 - state.norm**2 > 1e-3:
        raise ValueError(
            f"initial state poorly represented: norm^2 = {state.norm**2:.6f}; increase n_basis"
        )
    return state


def tunneling_time(basis: EigenBasis) -> float:
    """``3 / (E1 - E0)``.

    Raises :class:`PrecisionError` when the splitting is within a factor 100
    of the eigensolver noise floor.
    """
    if basis.n_basis < 2:
        raise ValueError("need at least two states")
    split = basis.splitting
    if split <= 100.0 * basis.noise_floor:
        hint = "use precision='extended'" if basis.precision == "double" else "supply tau as an input"
        raise PrecisionError(
            f"splitting {split:.3e} is below 100x the noise floor {basis.noise_floor:.3e}; {hint}"
        )
    return 3.0 / split


def instanton_action(potential: PotentialSpec) -> float:
    return 16.0 / 3.0 * potential.v0 / potential.omega


def instanton_estimate(potential: PotentialSpec) -> float:
    """Single-instanton tunneling time; needs ``v0/omega >= 1``."""
    n = potential.n_states
    if n < 1:
        raise ValueError(f"instanton estimate needs v0/omega >= 1, got {n:.3f}")
    om = potential.omega
    return 3.0 / 8.0 * math.sqrt(math.pi / 2.0 / n) / om * math.exp(instanton_action(potential))
