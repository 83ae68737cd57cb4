"""High-temperature Markovian master equation in the energy eigenbasis.

With ``Lambda`` and ``T`` large compared with every Bohr frequency the bath
kernels become time independent and the master equation is linear with
constant coefficients, ``drho/dt = -M rho``.  It is then solved exactly by the
matrix exponential of the ``N^2 x N^2`` superoperator.

The generator is

    drho/dt = -i [H, rho] - [x, [X_nu, rho]] + i [x, {X_eta, rho}]

with ``X_nu[a, b] = x[a, b] K(Delta_ab)``, ``K = (pi/2) I(Delta) coth(Delta/2T)``
and ``X_eta[a, b] = x[a, b] (Lambda - i Delta) Y(Delta_ab)``,
``Y = gamma0 Lambda^2 / (Lambda^2 + Delta^2)``.  The anomalous diffusion term,
of order ``1/T``, is dropped.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import observables
from .spectrum import EigenBasis

logger = logging.getLogger(__name__)

__all__ = [
    "ThermalEnvironment",
    "Superoperator",
    "GuardResult",
    "noise_coefficient",
    "dissipation_coefficient",
    "build_superoperator",
    "propagate",
    "entropy_guard",
    "evolve",
]


@dataclass(frozen=True)
class ThermalEnvironment:
    """Ohmic bath ``I(w) = (2/pi) gamma0 w Lambda^2/(Lambda^2 + w^2)`` at temperature ``T``.

    ``margin`` is the factor used to decide whether ``Lambda`` and ``T`` are
    much larger than the Bohr frequencies; the checks are reported, not
    enforced.
    """

    gamma0: float
    temperature: float
    cutoff: float
    margin: float = 10.0

    def __post_init__(self):
        if self.gamma0 < 0 or self.temperature <= 0 or self.cutoff <= 0:
            raise ValueError("need gamma0 >= 0, T > 0 and Lambda > 0")

    @property
    def diffusion(self) -> float:
        """Markovian diffusion constant ``D = 2 gamma0 T``."""
        return 2.0 * self.gamma0 * self.temperature

    def spectral_density(self, w):
        w = np.asarray(w, dtype=float)
        return 2.0 / math.pi * self.gamma0 * w * self.cutoff**2 / (self.cutoff**2 + w * w)

    def validity(self, basis: EigenBasis) -> dict[str, bool]:
        top = float(np.max(np.abs(basis.delta)))
        return {
            "cutoff_markov": self.cutoff >= self.margin * top,
            "high_temperature": self.temperature >= self.margin * top,
        }


def _lorentz(delta, env: ThermalEnvironment):
    lam = env.cutoff
    return env.gamma0 * lam * lam / (lam * lam + delta * delta)


def noise_coefficient(delta, env: ThermalEnvironment):
    """``(pi/2) I(Delta) coth(Delta / 2T)``; tends to ``2 T Y`` at ``Delta = 0``."""
    delta = np.asarray(delta, dtype=float)
    y = _lorentz(delta, env)
    u = delta / (2.0 * env.temperature)
    # u coth(u) -> 1 as u -> 0; below 1e-4 the two-term series is exact in double
    small = np.abs(u) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        ucoth = np.where(small, 1.0 + u * u / 3.0, u / np.tanh(u))
    return y * 2.0 * env.temperature * ucoth


def dissipation_coefficient(delta, env: ThermalEnvironment):
    """Long-time limit ``int_0^inf eta(s) exp(-i Delta s) ds = (Lambda - i Delta) Y``."""
    delta = np.asarray(delta, dtype=float)
    return (env.cutoff - 1j * delta) * _lorentz(delta, env)


@dataclass
class Superoperator:
    """Constant generator ``M`` acting on row-major ``vec(rho)``: ``d vec/dt = -M vec``."""

    matrix: np.ndarray
    n: int
    env: ThermalEnvironment
    flags: dict[str, bool] = field(default_factory=dict)
    _decomp: tuple | None = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)
    fallback_used: bool = field(default=False, init=False)

    def apply(self, rho) -> np.ndarray:
        """``drho/dt`` for the given ``rho``."""
        return -(self.matrix @ np.asarray(rho, dtype=complex).reshape(-1)).reshape(self.n, self.n)

    def tensor(self) -> np.ndarray:
        """``M[mu, nu, alpha, beta]`` view."""
        n = self.n
        return self.matrix.reshape(n, n, n, n)

    def trace_defect(self) -> float:
        """``max |sum_mu M[mu, mu, alpha, beta]|`` relative to ``max |M|``."""
        t = self.tensor()
        return float(np.max(np.abs(np.einsum("mmab->ab", t))) / np.max(np.abs(self.matrix)))

    def hermiticity_defect(self) -> float:
        """``max |M[nu, mu, beta, alpha] - conj(M[mu, nu, alpha, beta])|`` relative to ``max |M|``."""
        t = self.tensor()
        swapped = t.transpose(1, 0, 3, 2)
        return float(np.max(np.abs(swapped - t.conj())) / np.max(np.abs(self.matrix)))

    def decomposition(self, cond_limit: float = 1e10):
        """Cached ``(eigenvalues, V, V^-1)`` of ``M``, or ``None`` when ill conditioned."""
        with self._lock:
            if self._decomp is None:
                w, v = linalg.eig(self.matrix)
                cond = np.linalg.cond(v)
                if not np.isfinite(cond) or cond > cond_limit:
                    logger.warning("eigenvector condition %.3e; using scaling and squaring", cond)
                    self._decomp = (None, None, None, cond)
                else:
                    # decay rates below rounding of the largest one are the
                    # stationary mode; a negative sign there would blow up at long t
                    tiny = 1e-12 * np.max(np.abs(w))
                    w = np.where(np.abs(w.real) < tiny, 1j * w.imag, w)
                    self._decomp = (w, v, linalg.inv(v), cond)
            w, v, vinv, _ = self._decomp
            return None if w is None else (w, v, vinv)

    @property
    def condition(self) -> float | None:
        return None if self._decomp is None else self._decomp[3]


def build_superoperator(basis: EigenBasis, env: ThermalEnvironment) -> Superoperator:
    """Assemble ``M`` from the position matrix and the bath coefficients.

    Uses ``vec(A rho B) = (A kron B^T) vec(rho)`` for row-major ``vec``.
    """
    n = basis.n_basis
    x = basis.x_matrix.astype(complex)
    delta = basis.delta
    eye = np.eye(n)
    x_nu = x * noise_coefficient(delta, env)
    x_eta = x * dissipation_coefficient(delta, env)
    h = np.diag(basis.energies).astype(complex)

    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    # -[x, [X, rho]] = -(x X rho - x rho X - X rho x + rho X x)
    gen -= np.kron(x @ x_nu, eye) - np.kron(x, x_nu.T) - np.kron(x_nu, x.T) + np.kron(eye, (x_nu @ x).T)
    # i [x, {X, rho}] = i (x X rho + x rho X - X rho x - rho X x)
    gen += 1j * (np.kron(x @ x_eta, eye) + np.kron(x, x_eta.T) - np.kron(x_eta, x.T) - np.kron(eye, (x_eta @ x).T))
    flags = env.validity(basis)
    for name, ok in flags.items():
        if not ok:
            logger.info("validity flag %s not satisfied", name)
    return Superoperator(-gen, n, env, flags)


def propagate(m: Superoperator, rho0, t) -> np.ndarray:
    """``rho(t) = exp(-M t) rho0`` for a scalar ``t`` or an array of times.

    The eigendecomposition of ``M`` is computed once and reused.  If it is
    ill conditioned the matrix exponential is taken by scaling and squaring
    instead.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    vec = rho0.reshape(-1)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    dec = m.decomposition()
    out = np.empty((len(times), m.n, m.n), dtype=complex)
    if dec is not None:
        w, v, vinv = dec
        coef = vinv @ vec
        for i, ti in enumerate(times):
            out[i] = (v @ (np.exp(-w * ti) * coef)).reshape(m.n, m.n)
    else:
        m.fallback_used = True
        for i, ti in enumerate(times):
            out[i] = (linalg.expm(-m.matrix * ti) @ vec).reshape(m.n, m.n)
    # the exact flow keeps rho Hermitian; strip rounding from the eigenbasis transform
    out = 0.5 * (out + out.conj().transpose(0, 2, 1))
    return out[0] if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class GuardResult:
    tripped: bool
    ratio: float


def entropy_guard(rho, n_basis: int | None = None, threshold: float = 0.98) -> GuardResult:
    """Flag saturation of the linear entropy, ``S_L / ln N >= threshold``."""
    rho = np.asarray(rho)
    n = rho.shape[0] if n_basis is None else n_basis
    s, _ = observables.linear_entropy(rho)
    ratio = s / math.log(n)
    return GuardResult(ratio >= threshold, ratio)


def evolve(
    m: Superoperator,
    basis: EigenBasis,
    rho0,
    times,
    snapshot_times=(),
    guard_threshold: float = 0.98,
) -> dict:
    """Evaluate ``rho(t)`` on ``times`` and collect the standard observables.

    Returns a dict with columns ``t, p_left, entropy_ratio, energy, guard``
    (``guard`` is 1 once the entropy guard has tripped, and stays 1) plus
    ``snapshots`` (time -> rho).
    """
    times = np.asarray(times, dtype=float)
    q = basis.left_projector()
    rhos = propagate(m, rho0, times)
    cols = {"t": times, "p_left": [], "entropy_ratio": [], "energy": [], "guard": []}
    tripped = False
    for rho in rhos:
        g = entropy_guard(rho, basis.n_basis, guard_threshold)
        tripped = tripped or g.tripped
        cols["p_left"].append(observables.p_left(rho, basis, q))
        cols["entropy_ratio"].append(g.ratio)
        cols["energy"].append(observables.mean_energy(rho, basis))
        cols["guard"].append(int(tripped))
    out = {k: np.asarray(v) for k, v in cols.items()}
    snaps = np.asarray(snapshot_times, dtype=float)
    out["snapshots"] = dict(zip(snaps.tolist(), propagate(m, rho0, snaps))) if len(snaps) else {}
    return out
