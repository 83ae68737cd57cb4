"""Embedded Dormand-Prince 5(4) stepper for array-valued (complex) ODEs."""

from __future__ import annotations

import numpy as np

__all__ = ["IntegrationError", "dormand_prince"]


class IntegrationError(RuntimeError):
    """Step-size underflow or an invariant violated during integration."""


_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# fifth-order weights minus embedded fourth-order weights
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))


def _initial_step(fun, t0, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dormand_prince(
    fun,
    y0,
    times,
    rtol=1e-8,
    atol=1e-11,
    callback=None,
    max_steps=10_000_000,
    h_init=None,
):
    """Integrate ``y' = fun(t, y)`` and call ``callback(t, y)`` at each of ``times``.

    ``times`` must be sorted; the first entry is the initial time.  Steps are
    shortened to land exactly on every requested time so no interpolation is
    involved.  Returns a dict of step statistics.
    """
    times = np.asarray(times, dtype=float)
    t = float(times[0])
    y = np.array(y0, copy=True)
    if callback is not None:
        callback(t, y)
    k1 = fun(t, y)
    h = h_init or _initial_step(fun, t, y, k1, rtol, atol)
    accepted = rejected = 0
    h_min_seen = np.inf
    for target in times[1:]:
        while t < target:
            if accepted + rejected >= max_steps:
                raise IntegrationError(f"exceeded {max_steps} steps at t={t:.6g}")
            last = t + h >= target - 1e-12 * max(abs(target), 1.0)
            step = target - t if last else h
            if step <= 1e-14 * max(abs(t), 1.0):
                raise IntegrationError(f"step size underflow (h={step:.3e}) at t={t:.6g}")
            ks = [k1]
            for i in range(1, 7):
                yi = y.copy()
                for a, k in zip(_A[i], ks):
                    if a:
                        yi += (step * a) * k
                ks.append(fun(t + _C[i] * step, yi))
                if i == 6:
                    y_new = yi
            err = sum((step * e) * k for e, k in zip(_E, ks) if e)
            norm = _error_norm(err, y, y_new, rtol, atol)
            if norm <= 1.0:
                t = target if last else t + step
                y = y_new
                k1 = ks[6]
                accepted += 1
                h_min_seen = min(h_min_seen, step)
                fac = 5.0 if norm == 0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
                if not last:
                    h = step * fac
                elif fac < 1.0:
                    h = min(h, step * fac)
            else:
                rejected += 1
                h = step * max(0.2, 0.9 * norm ** -0.2)
        if callback is not None:
            callback(t, y)
    return {"accepted": accepted, "rejected": rejected, "h_min": h_min_seen, "h_last": h}
