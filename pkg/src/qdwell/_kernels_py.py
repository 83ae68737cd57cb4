"""Pure numpy implementation of the Langevin stepping kernel.

Mirrors the compiled kernel operation for operation.  Random numbers come from
a counter-based generator: output ``n`` of stream ``key`` is the splitmix64
finaliser applied to ``key + (n + 1) * golden``, so any trajectory and step
can be generated independently of scheduling.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_PI = 6.283185307179586
_INV_2_53 = 1.0 / 9007199254740992.0
DIVERGED = 1.0e8


def mix64(z):
    """splitmix64 finaliser on ``uint64`` input (scalar or array)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniform(key, counter):
    """Uniform deviates in ``(0, 1)`` for ``uint64`` counters."""
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (np.asarray(counter, dtype=np.uint64) + np.uint64(1)) * GOLDEN
    bits = mix64(z) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * _INV_2_53


def normal_pair(key, base):
    """Box-Muller pair from counters ``base`` and ``base + 1``."""
    base = np.asarray(base, dtype=np.uint64)
    u1 = uniform(key, base)
    u2 = uniform(key, base + np.uint64(1))
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(_TWO_PI * u2), r * np.sin(_TWO_PI * u2)


def step_normals(key, traj, step):
    """Standard normal used by trajectory ``traj`` at global step ``step``.

    Steps ``2j`` and ``2j + 1`` share one Box-Muller pair.
    """
    traj = np.asarray(traj, dtype=np.uint64)
    pair = np.uint64(step >> 1)
    base = (traj << np.uint64(32)) + np.uint64(2) * pair
    c, s = normal_pair(key, base)
    return c if step % 2 == 0 else s


def advance(x, p, alive, traj, step0, nsteps, dt, friction, k1, k3, sigma, key):
    """Advance ``nsteps`` semi-implicit Euler steps in place.

    ``p += -dt (friction p + k1 x + k3 x^3) + sigma sqrt(dt) xi``, then
    ``x += dt p``.  Trajectories leaving ``|x| < 1e8`` or turning non-finite
    are frozen and marked dead.  Returns the number of new divergences.
    """
    sq = np.sqrt(dt)
    idx = np.flatnonzero(alive)
    xs, ps, tr = x[idx], p[idx], traj[idx]
    for s in range(step0, step0 + nsteps):
        xi = step_normals(key, tr, s)
        ps = ps - dt * (friction * ps + k1 * xs + k3 * xs * xs * xs) + sigma * sq * xi
        xs = xs + dt * ps
    bad = ~(np.abs(xs) < DIVERGED) | ~np.isfinite(ps)
    x[idx], p[idx] = xs, ps
    alive[idx[bad]] = 0
    return int(bad.sum())


def sample_gaussian(key, traj, mean, sd):
    """One normal per trajectory from the Box-Muller pair at counter ``traj << 32``."""
    traj = np.asarray(traj, dtype=np.uint64)
    c, _ = normal_pair(key, traj << np.uint64(32))
    return mean + sd * c
