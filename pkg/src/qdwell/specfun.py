"""Sine/cosine integrals and exponentially scaled exponential integrals.

The zero-temperature diffusion coefficients contain ``Shi(z) cosh(z)`` and
``Chi(z) sinh(z)`` which individually overflow for ``z = Lambda t`` beyond a
few hundred while their combinations stay ``O(1/z)``.  Using ``Chi + Shi = Ei``
and ``Chi - Shi = -E1`` every such combination is rewritten in terms of
``exp(z) E1(z)`` and ``exp(-z) Ei(z)``, both bounded for ``z > 0``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "EULER_GAMMA",
    "si",
    "ci",
    "cin",
    "scaled_e1",
    "scaled_ei",
    "hyp_cosh_combo",
    "hyp_sinh_combo",
    "log_regular_combo",
    "hyp_combos",
]

_ASYMPTOTIC_FROM = 50.0
_SERIES_BELOW = 0.5


def si(x):
    return special.sici(x)[0]


def ci(x):
    """Cosine integral for ``x > 0``."""
    return special.sici(x)[1]


# Cin(x) = sum_k (-1)^(k+1) x^(2k) / (2k (2k)!), highest power first for polyval
_CIN_SERIES = np.array(
    [(-1.0) ** (k + 1) / (2 * k * math.factorial(2 * k)) for k in range(11, 0, -1)] + [0.0]
)


def cin(x):
    """Entire cosine integral ``Cin(x) = gamma + ln|x| - Ci(|x|)``.

    ``Cin(x) = int_0^x (1 - cos u)/u du``; even in ``x`` and free of the
    logarithmic singularity at the origin.
    """
    return sici_cin(x)[1]


def sici_cin(x):
    """``(Si(x), Cin(x))`` from a single sine/cosine integral evaluation."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.reshape(-1)
    ax = np.abs(x)
    s, c = special.sici(ax)
    small = ax < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = EULER_GAMMA + np.log(ax) - c
    # the series avoids cancellation between ln x and Ci(x) near 0
    out[small] = np.polyval(_CIN_SERIES, ax[small] ** 2)
    s = np.copysign(s, x)
    return _finish(s.reshape(shape)), _finish(out.reshape(shape))


def _asymptotic(z, parity=None, sign=1.0):
    # (1/z) sum_k sign^k k!/z^k, optionally restricted to even or odd k
    term = np.ones_like(z)
    acc = np.ones_like(z) if parity in (None, 0) else np.zeros_like(z)
    for k in range(1, 60):
        term = term * (k / z)
        if parity is None:
            acc += sign**k * term
        elif k % 2 == parity:
            acc += term
        if np.all(term < 1e-18):
            break
    return acc / z


def scaled_e1(z):
    """``exp(z) E1(z)`` for ``z > 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z >= _ASYMPTOTIC_FROM
    out[big] = _asymptotic(z[big], sign=-1.0)
    zs = z[~big]
    out[~big] = np.exp(zs) * special.exp1(zs)
    return out[()] if out.ndim == 0 else out


def scaled_ei(z):
    """``exp(-z) Ei(z)`` for ``z > 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z >= _ASYMPTOTIC_FROM
    out[big] = _asymptotic(z[big])
    zs = z[~big]
    out[~big] = np.exp(-zs) * special.expi(zs)
    return out[()] if out.ndim == 0 else out


def _small_parts(z):
    """Pieces of the ``z -> 0`` expansion, ``Ei(z) = gamma + ln z + P(z)``.

    Returns ``(gamma + ln z, cosh z, sinh z, even part of P, odd part of P)``.
    """
    p_even = np.zeros_like(z)
    p_odd = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 25):
        term = term * z / k
        if k % 2:
            p_odd += term / k
        else:
            p_even += term / k
    with np.errstate(divide="ignore"):
        log_part = EULER_GAMMA + np.log(z)
    return log_part, np.cosh(z), np.sinh(z), p_even, p_odd


def _split(z):
    z = np.asarray(z, dtype=float)
    small = z < _SERIES_BELOW
    return z, small, ~small & (z >= _ASYMPTOTIC_FROM), ~small & (z < _ASYMPTOTIC_FROM)


def _finish(out):
    return out[()] if out.ndim == 0 else out


def hyp_cosh_combo(z):
    """``Shi(z) cosh z - Chi(z) sinh z = [exp(z) E1(z) + exp(-z) Ei(z)] / 2``.

    Vanishes at ``z = 0`` and decays as ``1/z``.
    """
    z, small, big, mid = _split(z)
    out = np.zeros_like(z)
    pos = small & (z > 0)
    if pos.any():
        log_part, c, s, p_even, p_odd = _small_parts(z[pos])
        out[pos] = -log_part * s + c * p_odd - s * p_even
    out[big] = _asymptotic(z[big], parity=0)
    zm = z[mid]
    out[mid] = 0.5 * (np.exp(zm) * special.exp1(zm) + np.exp(-zm) * special.expi(zm))
    return _finish(out)


def hyp_sinh_combo(z):
    """``Shi(z) sinh z - Chi(z) cosh z = [exp(z) E1(z) - exp(-z) Ei(z)] / 2``.

    Diverges like ``-ln z`` at the origin and decays as ``-1/z^2``.
    """
    z, small, big, mid = _split(z)
    out = np.empty_like(z)
    if small.any():
        log_part, c, s, p_even, p_odd = _small_parts(z[small])
        out[small] = -log_part * c - (c * p_even - s * p_odd)
    out[big] = -_asymptotic(z[big], parity=1)
    zm = z[mid]
    out[mid] = 0.5 * (np.exp(zm) * special.exp1(zm) - np.exp(-zm) * special.expi(zm))
    return _finish(out)


def log_regular_combo(z):
    """``-hyp_sinh_combo(z) - gamma - ln z``, finite at ``z = 0`` where it vanishes."""
    z, small, big, mid = _split(z)
    out = np.zeros_like(z)
    pos = small & (z > 0)
    if pos.any():
        zs = z[pos]
        log_part, c, s, p_even, p_odd = _small_parts(zs)
        out[pos] = log_part * 2.0 * np.sinh(0.5 * zs) ** 2 + (c * p_even - s * p_odd)
    rest = ~small
    out[rest] = -hyp_sinh_combo(z[rest]) - EULER_GAMMA - np.log(z[rest])
    return _finish(out)


def hyp_combos(z: float) -> tuple[float, float, float]:
    """Scalar ``(hyp_cosh_combo, hyp_sinh_combo, log_regular_combo)`` at ``z > 0``.

    Shares the work between the three and avoids array overhead; this is the
    per-stage hot path of the zero-temperature integrator.
    """
    if z < _SERIES_BELOW:
        log_part, c, s, p_even, p_odd = (float(v[0]) for v in _small_parts(np.array([z])))
        a = -log_part * s + c * p_odd - s * p_even
        b = -log_part * c - (c * p_even - s * p_odd)
        r = log_part * 2.0 * math.sinh(0.5 * z) ** 2 + (c * p_even - s * p_odd)
        return a, b, r
    if z >= _ASYMPTOTIC_FROM:
        odd = 0.0
        term = even = 1.0
        for k in range(1, 60):
            term *= k / z
            if k % 2:
                odd += term
            else:
                even += term
            if term < 1e-18:
                break
        a, b = even / z, -odd / z
    else:
        e1 = math.exp(z) * float(special.exp1(z))
        ei = math.exp(-z) * float(special.expi(z))
        a, b = 0.5 * (e1 + ei), 0.5 * (e1 - ei)
    return a, b, -b - EULER_GAMMA - math.log(z)
