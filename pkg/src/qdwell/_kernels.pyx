# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Langevin stepping kernel; same arithmetic as ``_kernels_py``."""

from libc.math cimport fabs, isfinite, log, sqrt
from libc.stdint cimport uint64_t

cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double DIVERGED = 1.0e8


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t counter) nogil:
    cdef uint64_t bits = mix64(key + (counter + 1) * GOLDEN) >> 11
    return (<double>bits + 0.5) * INV_2_53


cdef inline void normal_pair(uint64_t key, uint64_t base, double *c, double *s) nogil:
    cdef double u1 = uniform(key, base)
    cdef double u2 = uniform(key, base + 1)
    cdef double r = sqrt(-2.0 * log(u1))
    cdef double sv, cv
    sincos(TWO_PI * u2, &sv, &cv)
    c[0] = r * cv
    s[0] = r * sv


DEF LANES = 128


def advance(double[::1] x, double[::1] p, unsigned char[::1] alive, uint64_t[::1] traj,
            long long step0, long long nsteps, double dt, double friction,
            double k1, double k3, double sigma, uint64_t key):
    """Advance ``nsteps`` semi-implicit Euler steps in place; returns new divergences.

    Trajectories are stepped in interleaved lanes so that independent
    updates overlap in the pipeline; the arithmetic per trajectory is the
    same as stepping it alone.
    """
    cdef Py_ssize_t lo, hi, i, j, n = x.shape[0]
    cdef long long s
    cdef double xs, ps, xi, c, sn, sq = sqrt(dt)
    cdef double spare[LANES]
    cdef uint64_t base
    cdef int lost = 0
    with nogil:
        for lo in range(0, n, LANES):
            hi = lo + LANES if lo + LANES < n else n
            for s in range(step0, step0 + nsteps):
                for i in range(lo, hi):
                    if not alive[i]:
                        continue
                    j = i - lo
                    if s % 2 == 0 or s == step0:
                        base = (traj[i] << 32) + 2 * <uint64_t>(s >> 1)
                        normal_pair(key, base, &c, &sn)
                        spare[j] = sn
                        xi = c if s % 2 == 0 else sn
                    else:
                        xi = spare[j]
                    xs = x[i]
                    ps = p[i] - dt * (friction * p[i] + k1 * xs + k3 * xs * xs * xs) + sigma * sq * xi
                    xs = xs + dt * ps
                    x[i] = xs
                    p[i] = ps
                    if not (fabs(xs) < DIVERGED) or not isfinite(ps):
                        alive[i] = 0
                        lost += 1
    return lost
