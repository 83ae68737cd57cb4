"""Classical Langevin ensembles in the double well.

Each trajectory obeys ``x'' = -2 gamma0 x' - V'(x) + xi(t)`` with white
Gaussian noise.  The corresponding Fokker-Planck equation has friction
``2 gamma0`` and momentum diffusion ``D = 2 gamma0 T``, which requires
``<xi(t) xi(t')> = 2 D delta(t - t') = 4 gamma0 T delta``.  That is the default
(``"fdt"``); ``"literal"`` uses ``gamma0 T`` instead.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels_py
from .spectrum import PotentialSpec

logger = logging.getLogger(__name__)

try:
    if os.environ.get("QDWELL_PURE_PYTHON") == "1":
        raise ImportError("pure python requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

__all__ = [
    "BACKEND",
    "DivergenceError",
    "LangevinConfig",
    "EnsembleState",
    "EnsembleResult",
    "HarmonicWell",
    "noise_variance",
    "sample_initial",
    "evolve_ensemble",
    "histogram_bounds",
]

_INIT_STREAM = 0x5EED0001
_NOISE_STREAM = 0x5EED0002


class DivergenceError(RuntimeError):
    """More than the allowed fraction of trajectories blew up."""


@dataclass(frozen=True)
class HarmonicWell:
    """``V = omega^2 x^2 / 2`` centred at 0, for oracle comparisons."""

    omega: float

    @property
    def x0(self) -> float:
        return 0.0

    @property
    def v0(self) -> float:
        return 0.0

    def __call__(self, x):
        return 0.5 * self.omega**2 * np.asarray(x) ** 2

    def force_coefficients(self) -> tuple[float, float]:
        return self.omega**2, 0.0


@dataclass
class LangevinConfig:
    """Bath, integrator and ensemble settings.

    ``dt`` must resolve the well oscillation, ``dt <= 0.05 / omega``; this is
    checked against the potential when the ensemble is evolved.
    """

    gamma0: float
    temperature: float
    dt: float
    n_trajectories: int = 100_000
    seed: int = 0
    noise_variance_mode: str = "fdt"
    side: str = "left"
    threads: int = 1
    block: int = 8192
    max_divergent_fraction: float = 1e-3

    def __post_init__(self):
        if self.noise_variance_mode not in ("fdt", "literal"):
            raise ValueError("noise_variance_mode must be 'fdt' or 'literal'")
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if self.dt <= 0 or self.n_trajectories < 1:
            raise ValueError("need dt > 0 and at least one trajectory")


def noise_variance(config: LangevinConfig) -> float:
    """Strength ``s`` in ``<xi(t) xi(t')> = s delta(t - t')``."""
    g = config.gamma0 * config.temperature
    return 4.0 * g if config.noise_variance_mode == "fdt" else g


def _keys(seed: int) -> tuple[int, int]:
    base = int(seed) & 0xFFFFFFFFFFFFFFFF
    k_init = int(_kernels_py.mix64(np.uint64(base ^ _INIT_STREAM)))
    k_noise = int(_kernels_py.mix64(np.uint64(base ^ _NOISE_STREAM)))
    return k_init, k_noise


@dataclass
class EnsembleState:
    """Phase-space points of all trajectories at time ``time``."""

    x: np.ndarray
    p: np.ndarray
    alive: np.ndarray
    time: float = 0.0
    step: int = 0

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    def moments(self) -> dict[str, float]:
        a = self.alive.astype(bool)
        x, p = self.x[a], self.p[a]
        return {
            "x": float(x.mean()), "p": float(p.mean()),
            "xx": float((x * x).mean()), "pp": float((p * p).mean()), "xp": float((x * p).mean()),
        }


def sample_initial(config: LangevinConfig, potential) -> EnsembleState:
    """Draw from the classical analogue of the harmonic vacuum in one well.

    ``x ~ N(+-x0, sigma_x^2)`` and ``p ~ N(0, 1/(4 sigma_x^2))`` with
    ``sigma_x = 1/sqrt(2 Omega)``, independent.
    """
    omega = potential.omega
    sx = 1.0 / math.sqrt(2.0 * omega)
    sp = 1.0 / (2.0 * sx)
    center = -potential.x0 if config.side == "left" else potential.x0
    k_init, _ = _keys(config.seed)
    n = config.n_trajectories
    traj = np.arange(n, dtype=np.uint64)
    # positions and momenta use disjoint counter halves of each trajectory
    x = _kernels_py.sample_gaussian(k_init, traj, center, sx)
    p = _kernels_py.sample_gaussian(k_init ^ 0xA5A5A5A5A5A5A5A5, traj, 0.0, sp)
    return EnsembleState(x, p, np.ones(n, dtype=np.uint8))


def histogram_bounds(potential, config: LangevinConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    """Phase-space window ``[-2 x0, 2 x0] x [-2 p_max, 2 p_max]``.

    ``p_max = sqrt(2 (V0 + 4 T_eff))`` with ``T_eff`` the kinetic temperature
    reached by the noise, clipped to ``V0``.
    """
    t_eff = min(noise_variance(config) / (4.0 * config.gamma0) if config.gamma0 > 0 else 0.0, potential.v0)
    p_max = math.sqrt(2.0 * (potential.v0 + 4.0 * t_eff)) if potential.v0 > 0 else 1.0
    x0 = potential.x0 if potential.x0 > 0 else 1.0
    return (-2.0 * x0, 2.0 * x0), (-2.0 * p_max, 2.0 * p_max)


@dataclass
class EnsembleResult:
    """Time series of ensemble averages plus phase-space histograms."""

    t: np.ndarray
    p_left: np.ndarray
    energy: np.ndarray
    n_alive: np.ndarray
    moments: dict[str, np.ndarray] = field(default_factory=dict)
    histograms: dict[float, np.ndarray] = field(default_factory=dict)
    hist_bounds: tuple | None = None
    state: EnsembleState | None = None
    backend: str = BACKEND


def _advance_blocks(state, traj, start, nsteps, config, coeffs, sigma, key, backend):
    k1, k3 = coeffs
    friction = 2.0 * config.gamma0
    impl = _compiled if backend == "compiled" else _kernels_py
    n = len(state.x)
    edges = list(range(0, n, config.block)) + [n]

    def run(lo, hi):
        # each block owns a contiguous slice; writes never overlap
        xs, ps, al = state.x[lo:hi], state.p[lo:hi], state.alive[lo:hi]
        lost = impl.advance(xs, ps, al, traj[lo:hi], start, nsteps, config.dt, friction, k1, k3, sigma, key)
        return lost

    pairs = list(zip(edges[:-1], edges[1:]))
    if config.threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            return sum(pool.map(lambda b: run(*b), pairs))
    return sum(run(lo, hi) for lo, hi in pairs)


def evolve_ensemble(
    state: EnsembleState,
    config: LangevinConfig,
    potential,
    t_end: float,
    record_every: int = 100,
    snapshot_times=(),
    bins: int = 256,
    backend: str | None = None,
) -> EnsembleResult:
    """Integrate every trajectory to ``t_end`` recording ensemble averages.

    Parameters
    ----------
    record_every : int
        Steps between recorded rows.
    snapshot_times : sequence of float
        Times (rounded to the step grid) at which ``bins x bins`` occupancy
        histograms are stored.
    backend : {"compiled", "python"}, optional
        Defaults to the compiled kernel when it is importable.

    Raises
    ------
    DivergenceError
        If more than ``config.max_divergent_fraction`` of the trajectories
        diverge.
    """
    backend = backend or BACKEND
    if backend == "compiled" and _compiled is None:
        raise RuntimeError("compiled kernel not available")
    omega = getattr(potential, "omega")
    if config.dt > 0.05 / omega * (1 + 1e-12):
        raise ValueError(f"dt = {config.dt} exceeds 0.05/omega = {0.05 / omega:.4g}")
    coeffs = potential.force_coefficients()
    sigma = math.sqrt(noise_variance(config))
    _, key = _keys(config.seed)
    n_steps = int(round(t_end / config.dt))
    traj = np.arange(len(state.x), dtype=np.uint64)
    snaps = {int(round(s / config.dt)): float(s) for s in snapshot_times if round(s / config.dt) <= n_steps}
    stops = sorted(set(range(state.step, n_steps + 1, record_every)) | {n_steps} | set(snaps))
    stops = [s for s in stops if s >= state.step]
    xb, pb = histogram_bounds(potential, config)

    rows = {"t": [], "p_left": [], "energy": [], "n_alive": []}
    mom = {k: [] for k in ("x", "p", "xx", "pp", "xp")}
    hists = {}
    lost = 0
    n_total = len(state.x)
    for stop in stops:
        if stop > state.step:
            lost += _advance_blocks(state, traj, state.step, stop - state.step, config, coeffs, sigma, key, backend)
            state.step = stop
            state.time = stop * config.dt
            if lost > config.max_divergent_fraction * n_total:
                raise DivergenceError(f"{lost} of {n_total} trajectories diverged by t={state.time:.4g}")
        a = state.alive.astype(bool)
        x, p = state.x[a], state.p[a]
        if stop % record_every == 0 or stop == n_steps:
            rows["t"].append(state.time)
            rows["p_left"].append(float(np.mean(x < 0)))
            rows["energy"].append(float(np.mean(0.5 * p * p + potential(x))))
            rows["n_alive"].append(int(a.sum()))
            for k, v in state.moments().items():
                mom[k].append(v)
        if stop in snaps:
            h, _, _ = np.histogram2d(x, p, bins=bins, range=[xb, pb])
            hists[snaps[stop]] = h
    if lost:
        logger.warning("%d trajectories diverged", lost)
    return EnsembleResult(
        np.asarray(rows["t"]), np.asarray(rows["p_left"]), np.asarray(rows["energy"]),
        np.asarray(rows["n_alive"]), {k: np.asarray(v) for k, v in mom.items()}, hists,
        (xb, pb), state, backend,
    )
