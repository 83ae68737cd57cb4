"""Fits of the left-well probability and parameter scans over the bath.

The model is ``P(t) = 1/2 + 1/2 cos(pi t / tau) exp(-t / t_act)``, fitted in
terms of the rate ``k = 1/t_act >= 0`` so the closed system (``k = 0``) sits
inside the admissible region.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

logger = logging.getLogger(__name__)

__all__ = [
    "FitError",
    "FitResult",
    "model",
    "fit_pt",
    "ScanRow",
    "ScanTable",
    "run_scan",
    "lambda_scan",
    "gamma_scan",
    "loglog_slope",
]


class FitError(RuntimeError):
    """No start point converged; carries the best residual reached."""

    def __init__(self, message, residual=math.inf):
        super().__init__(message)
        self.residual = residual


@dataclass
class FitResult:
    """Fitted parameters of the damped-oscillation model.

    ``tau_fit`` is ``nan`` when the oscillation term was dropped.  ``t_act``
    is ``inf`` when the fitted decay rate is zero.
    """

    tau_fit: float
    t_act: float
    p_inf: float = 0.5
    residual: float = math.nan
    covariance: np.ndarray | None = None
    oscillation_present: bool = True
    free_asymptote: bool = False
    amplitude: float = 1.0
    amplitude_se: float = 0.0
    horizon: float = math.nan

    @property
    def t_act_bounded(self) -> bool:
        """False when ``t_act`` exceeds ten times the fitted series length."""
        return self.t_act <= 10.0 * self.horizon

    def stderr(self) -> np.ndarray:
        if self.covariance is None:
            return np.array([])
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def model(t, tau, t_act, p_inf=0.5):
    """``p_inf + (1 - p_inf) cos(pi t / tau) exp(-t / t_act)``."""
    t = np.asarray(t, dtype=float)
    k = 0.0 if math.isinf(t_act) else 1.0 / t_act
    return p_inf + (1.0 - p_inf) * np.cos(math.pi * t / tau) * np.exp(-k * t)


def _covariance(jac, resid, n_par):
    dof = max(len(resid) - n_par, 1)
    s2 = float(resid @ resid) / dof
    try:
        return np.linalg.inv(jac.T @ jac) * s2
    except np.linalg.LinAlgError:
        return np.linalg.pinv(jac.T @ jac) * s2


def _fit_oscillating(t, p, tau0, free):
    # parameters: (tau, k) or (tau, k, p_inf)
    def resid(q):
        tau, k = q[0], q[1]
        pin = q[2] if free else 0.5
        return pin + (1 - pin) * np.cos(math.pi * t / tau) * np.exp(-k * t) - p

    def jac(q):
        tau, k = q[0], q[1]
        pin = q[2] if free else 0.5
        ph = math.pi * t / tau
        e = np.exp(-k * t)
        cols = [
            (1 - pin) * np.sin(ph) * e * ph / tau,
            -(1 - pin) * np.cos(ph) * e * t,
        ]
        if free:
            cols.append(1.0 - np.cos(ph) * e)
        return np.column_stack(cols)

    k0 = 1.0 / max(t[-1], 1e-300)
    best = None
    for scale in (0.5, 1.0, 2.0):
        q0 = [scale * tau0, k0] + ([0.5] if free else [])
        lo = [1e-6 * tau0, 0.0] + ([0.0] if free else [])
        hi = [np.inf, np.inf] + ([1.0] if free else [])
        try:
            sol = optimize.least_squares(resid, q0, jac=jac, bounds=(lo, hi), method="trf",
                                         x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14)
        except ValueError as exc:
            logger.debug("start %.3g failed: %s", scale, exc)
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise FitError("all start points failed")
    return best, resid, jac


def _amplitude_test(t, p, tau, k):
    """Weight ``c`` of the cosine in ``1/2 + 1/2 e^{-kt} [(1-c) + c cos]``, with its standard error."""
    def resid(q):
        kk, c = q
        return 0.5 + 0.5 * np.exp(-kk * t) * ((1 - c) + c * np.cos(math.pi * t / tau)) - p

    def jac(q):
        kk, c = q
        e = np.exp(-kk * t)
        inner = (1 - c) + c * np.cos(math.pi * t / tau)
        return np.column_stack([-0.5 * t * e * inner, 0.5 * e * (np.cos(math.pi * t / tau) - 1)])

    sol = optimize.least_squares(resid, [max(k, 1e-12), 1.0], jac=jac,
                                 bounds=([0.0, -np.inf], [np.inf, np.inf]), method="trf", x_scale="jac")
    cov = _covariance(sol.jac, sol.fun, 2)
    return float(sol.x[1]), float(math.sqrt(max(cov[1, 1], 0.0)))


def _fit_decay_only(t, p, free):
    def resid(q):
        pin = q[1] if free else 0.5
        return pin + (1 - pin) * np.exp(-q[0] * t) - p

    def jac(q):
        pin = q[1] if free else 0.5
        e = np.exp(-q[0] * t)
        cols = [-(1 - pin) * t * e]
        if free:
            cols.append(1.0 - e)
        return np.column_stack(cols)

    q0 = [1.0 / max(t[-1], 1e-300)] + ([0.5] if free else [])
    lo = [0.0] + ([0.0] if free else [])
    hi = [np.inf] + ([1.0] if free else [])
    sol = optimize.least_squares(resid, q0, jac=jac, bounds=(lo, hi), method="trf", x_scale="jac",
                                 xtol=1e-14, ftol=1e-14, gtol=1e-14)
    return sol


def fit_pt(t, p, tau0: float, free_asymptote: bool = False, drop_factor: float = 3.0) -> FitResult:
    """Fit ``P(t)`` to the damped-oscillation model.

    Parameters
    ----------
    t, p : array_like
        Sampled left-well probability.
    tau0 : float
        Closed-system tunneling time; multistart uses ``{0.5, 1, 2} * tau0``.
    free_asymptote : bool
        Also fit the long-time value ``p_inf`` instead of fixing it at 1/2.
    drop_factor : float
        The cosine is dropped when its weight is below ``drop_factor`` times
        its own standard error, or when the fitted half period runs past
        twice the series length (the cosine then only mimics a decay).

    Returns
    -------
    FitResult
    """
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    if t.shape != p.shape or len(t) < 4:
        raise ValueError("need matching t and p with at least 4 samples")
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite samples in P(t)")
    n_par = 3 if free_asymptote else 2
    sol, resid, _ = _fit_oscillating(t, p, tau0, free_asymptote)
    tau, k = float(sol.x[0]), float(sol.x[1])
    c, c_se = _amplitude_test(t, p, tau, k)
    horizon = float(t[-1] - t[0])
    if abs(c) < drop_factor * c_se or tau > 2.0 * horizon:
        dsol = _fit_decay_only(t, p, free_asymptote)
        k = float(dsol.x[0])
        cov = _covariance(dsol.jac, dsol.fun, len(dsol.x))
        pin = float(dsol.x[1]) if free_asymptote else 0.5
        rms = float(np.sqrt(np.mean(dsol.fun**2)))
        return FitResult(math.nan, math.inf if k == 0 else 1.0 / k, pin, rms, cov, False,
                         free_asymptote, c, c_se, horizon)
    if not sol.success:
        raise FitError(f"least squares did not converge: {sol.message}", float(np.sqrt(2 * sol.cost / len(t))))
    cov = _covariance(sol.jac, sol.fun, n_par)
    pin = float(sol.x[2]) if free_asymptote else 0.5
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return FitResult(tau, math.inf if k == 0 else 1.0 / k, pin, rms, cov, True, free_asymptote,
                     c, c_se, horizon)


@dataclass
class ScanRow:
    scan_value: float
    result: FitResult | None
    error: str | None = None


@dataclass
class ScanTable:
    """Per-point fit results of a parameter scan."""

    parameter: str
    rows: list[ScanRow] = field(default_factory=list)

    columns = ("scan_value", "tau_fit", "t_act", "p_inf", "residual", "oscillation_present")

    def values(self, name: str) -> np.ndarray:
        out = []
        for r in self.rows:
            if name == "scan_value":
                out.append(r.scan_value)
            elif r.result is None:
                out.append(math.nan)
            else:
                out.append(float(getattr(r.result, name)))
        return np.asarray(out)

    def regime_change(self) -> float | None:
        """First scan value at which the oscillation term is dropped."""
        for r in self.rows:
            if r.result is not None and not r.result.oscillation_present:
                return r.scan_value
        return None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns + ("error",))
            for r in self.rows:
                res = r.result
                if res is None:
                    w.writerow([repr(r.scan_value)] + [""] * 5 + [r.error or ""])
                else:
                    w.writerow([repr(r.scan_value), repr(res.tau_fit), repr(res.t_act), repr(res.p_inf),
                                repr(res.residual), int(res.oscillation_present), ""])

    @classmethod
    def from_csv(cls, path, parameter: str = "") -> "ScanTable":
        table = cls(parameter)
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                if rec["error"]:
                    table.rows.append(ScanRow(float(rec["scan_value"]), None, rec["error"]))
                    continue
                res = FitResult(float(rec["tau_fit"]), float(rec["t_act"]), float(rec["p_inf"]),
                                float(rec["residual"]), None, bool(int(rec["oscillation_present"])))
                table.rows.append(ScanRow(float(rec["scan_value"]), res))
        return table


def run_scan(parameter: str, values, runner, tau0: float, free_asymptote: bool = False,
             workers: int = 1) -> ScanTable:
    """Run ``runner(value) -> (t, p)`` for every value and fit each trace.

    Failures are recorded on their row and the scan continues.
    """
    def one(v):
        try:
            t, p = runner(v)
            return ScanRow(float(v), fit_pt(t, p, tau0, free_asymptote))
        except Exception as exc:  # noqa: BLE001 - a scan keeps going past bad points
            logger.warning("%s = %g failed: %s", parameter, v, exc)
            return ScanRow(float(v), None, f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, values))
    else:
        rows = [one(v) for v in values]
    return ScanTable(parameter, rows)


def lambda_scan(values, runner, tau0: float, **kw) -> ScanTable:
    """Scan over the cutoff ``Lambda``; see :func:`run_scan`."""
    return run_scan("cutoff", values, runner, tau0, **kw)


def gamma_scan(values, runner, tau0: float, **kw) -> ScanTable:
    """Scan over the coupling ``gamma0``; see :func:`run_scan`."""
    return run_scan("gamma0", values, runner, tau0, **kw)


def loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its standard error."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    ok = np.isfinite(lx) & np.isfinite(ly)
    lx, ly = lx[ok], ly[ok]
    if len(lx) < 2:
        raise ValueError("need two finite points")
    a = np.column_stack([lx, np.ones_like(lx)])
    coef, res, *_ = np.linalg.lstsq(a, ly, rcond=None)
    dof = max(len(lx) - 2, 1)
    s2 = float(np.sum((ly - a @ coef) ** 2)) / dof
    se = math.sqrt(s2 / np.sum((lx - lx.mean()) ** 2)) if len(lx) > 2 else 0.0
    return float(coef[0]), se
