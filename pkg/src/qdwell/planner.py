"""Analytic time-scale estimates and scenario design relations.

Three times organise the dynamics: the decoherence time ``t_D``, the
tunneling time ``tau`` and the thermal activation time ``t_th``.  Choosing
``a = tau / t_D`` and ``b = tau / t_th`` fixes the well depth and the bath
strength.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .specfun import EULER_GAMMA
from .zerotemp import eval_coefficients

__all__ = [
    "ValidityWarning",
    "ScenarioPlan",
    "DecoherenceEstimate",
    "NoRootError",
    "decoherence_time_hiT",
    "thermal_activation_time",
    "harmonic_ground_energy",
    "plan_scenario",
    "decoherence_bound_zeroT",
    "decoherence_time_highfreq",
    "aint_closed_form",
    "aint_numerical",
    "aint_accumulate",
    "solve_decoherence_time",
]


class ValidityWarning(UserWarning):
    """An estimate was evaluated outside its stated range of validity."""


class NoRootError(RuntimeError):
    """``A_int`` never reaches 1 inside the queried window."""


@dataclass
class ScenarioPlan:
    """Design point: ratios ``a``, ``b`` and the derived physical parameters.

    ``gamma0_T`` is the product ``gamma0 * T`` on the high-temperature branch
    and the bare coupling ``gamma0`` on the zero-temperature branch.
    """

    a: float
    b: float
    tau: float
    v0_over_omega: float
    gamma0_T: float
    branch: str = "high-T"
    omega: float | None = None
    flags: list[str] = field(default_factory=list)

    @property
    def t_d(self) -> float:
        return self.tau / self.a

    @property
    def t_th(self) -> float:
        return self.tau / self.b

    def report(self) -> str:
        key = "gamma0_T" if self.branch == "high-T" else "gamma0"
        rows = [
            ("branch", self.branch),
            ("a", self.a),
            ("b", self.b),
            ("tau", self.tau),
            ("t_D", self.t_d),
            ("t_th", self.t_th),
            ("v0_over_omega", self.v0_over_omega),
            ("omega", self.omega),
            (key, self.gamma0_T),
        ]
        lines = [f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}" for k, v in rows]
        lines += [f"flag = {f}" for f in self.flags]
        return "\n".join(lines)

    def to_json(self) -> str:
        out = asdict(self)
        out["t_D"] = self.t_d
        out["t_th"] = self.t_th
        return json.dumps(out, indent=2, sort_keys=True)


@dataclass
class DecoherenceEstimate:
    """Two-packet superposition used for the ``A_int`` estimate.

    Attributes
    ----------
    l0 : float
        Half separation of the two packets.
    p0 : float
        Momentum offset of the packets.
    delta_width : float
        Packet width.
    times, a_int : ndarray
        Accumulated decoherence exponent on a time grid, filled by
        :func:`aint_accumulate`.
    t_d : float or None
        Time at which ``A_int = 1``.
    """

    l0: float
    p0: float = 0.0
    delta_width: float = 1.0
    times: np.ndarray | None = None
    a_int: np.ndarray | None = None
    t_d: float | None = None


def decoherence_time_hiT(omega: float, gamma0_T: float) -> float:
    """High-temperature decoherence time ``Omega / (4 gamma0 T)``."""
    if gamma0_T <= 0:
        raise ValueError("gamma0_T must be positive")
    return omega / (4.0 * gamma0_T)


def harmonic_ground_energy(v0: float, omega: float) -> float:
    """Harmonic estimate ``-V0 + Omega/2`` of the lowest level, barrier top at 0."""
    return -v0 + 0.5 * omega


def thermal_activation_time(v0: float, e0: float, gamma0_T: float) -> float:
    """Time ``(V0 - E0) / (2 gamma0 T)`` for linear energy growth to climb ``V0 - E0``.

    ``v0`` and ``e0`` must be measured from the same origin.
    """
    if gamma0_T <= 0:
        raise ValueError("gamma0_T must be positive")
    if e0 > v0:
        raise ValueError("e0 must not exceed v0")
    return (v0 - e0) / (2.0 * gamma0_T)


def plan_scenario(
    a: float,
    b: float,
    tau: float,
    omega: float | None = None,
    branch: str = "high-T",
) -> ScenarioPlan:
    """Derive well depth and bath strength from ``a = tau/t_D`` and ``b = tau/t_th``.

    On the high-T branch ``V0/Omega = (a/b + 1)/2`` and ``gamma0 T = a Omega / (4 tau)``
    (the latter only once ``omega`` is supplied).  On the zero-T branch the
    bound ``t_D <= 1/(8 gamma0)`` gives ``gamma0 = a / (8 tau)``.
    """
    if a <= 0 or b <= 0 or tau <= 0:
        raise ValueError("a, b and tau must be positive")
    flags = []
    if a / b < 1:
        flags.append("a/b < 1: activation precedes decoherence")
    ratio = 0.5 * (a / b + 1.0)
    if branch == "high-T":
        g = a * omega / (4.0 * tau) if omega is not None else math.nan
    elif branch == "zero-T":
        g = a / (8.0 * tau)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return ScenarioPlan(a, b, tau, ratio, g, branch, omega, flags)


def decoherence_bound_zeroT(gamma0: float) -> float:
    """Zero-temperature decoherence bound ``1 / (8 gamma0)``."""
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive")
    return 1.0 / (8.0 * gamma0)


def decoherence_time_highfreq(l0: float, gamma0: float, cutoff: float) -> float:
    """Decoherence time ``1 / (2 L0^2 gamma0 Lambda)`` for ``Delta ~ Lambda``.

    Valid while ``L0^2 gamma0 <= 1``; outside that range the value is still
    returned together with a :class:`ValidityWarning`.
    """
    if l0 * l0 * gamma0 > 1.0:
        warnings.warn(f"L0^2 gamma0 = {l0 * l0 * gamma0:.3g} > 1", ValidityWarning, stacklevel=2)
    return 1.0 / (2.0 * l0 * l0 * gamma0 * cutoff)


def aint_closed_form(l0: float, delta: float, t, gamma0: float, cutoff: float):
    """Small ``Delta t`` form of ``A_int``, valid for ``1/Lambda < t < 1/Delta``."""
    t = np.asarray(t, dtype=float)
    w = cutoff**2 / (cutoff**2 + delta**2)
    return 8.0 * w * gamma0 * (
        l0 * l0 / (2.0 * math.pi) * (delta * t) ** 2 + t * (np.log(cutoff * t) + EULER_GAMMA - 1.0)
    )


def _aint_rate(t, l0, delta, gamma0, cutoff):
    c = eval_coefficients(np.array([delta]), t, gamma0, cutoff)
    return 4.0 * l0 * l0 * c.d[0] - 2.0 * c.f[0]


def aint_numerical(l0: float, delta: float, times, gamma0: float, cutoff: float):
    """Integrate ``dA/dt = 4 L0^2 D(Delta, t) - 2 f(Delta, t)`` on ``times``.

    ``times`` must start at 0.  The rate is integrated piecewise with adaptive
    Gauss-Kronrod quadrature, so the grid only sets where values are reported.
    """
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ValueError("times must start at 0")
    out = np.zeros_like(times)
    if gamma0 == 0.0:
        return out
    acc = 0.0
    for i in range(1, len(times)):
        part, _ = integrate.quad(
            _aint_rate, times[i - 1], times[i], args=(l0, delta, gamma0, cutoff),
            epsabs=0.0, epsrel=1e-10, limit=200,
        )
        acc += part
        out[i] = acc
    return out


def aint_accumulate(
    estimate: DecoherenceEstimate,
    delta: float,
    t,
    gamma0: float,
    cutoff: float,
    method: str = "numerical",
) -> DecoherenceEstimate:
    """Fill ``estimate`` with ``A_int`` on the grid ``t`` and solve for ``t_D``.

    ``method`` is ``"numerical"`` (quadrature of the rate built from the
    zero-temperature coefficients) or ``"closed"`` (small ``Delta t`` form).
    ``t_D`` is left as ``None`` when ``A_int`` stays below 1.
    """
    t = np.asarray(t, dtype=float)
    if method == "numerical":
        grid = t if t[0] == 0.0 else np.concatenate([[0.0], t])
        a = aint_numerical(estimate.l0, delta, grid, gamma0, cutoff)
        a = a if t[0] == 0.0 else a[1:]
    elif method == "closed":
        if np.any(t <= 1.0 / cutoff):
            warnings.warn("closed form used at t <= 1/Lambda", ValidityWarning, stacklevel=2)
        a = aint_closed_form(estimate.l0, delta, t, gamma0, cutoff)
    else:
        raise ValueError(f"unknown method {method!r}")
    estimate.times = t
    estimate.a_int = a
    try:
        estimate.t_d = solve_decoherence_time(estimate.l0, delta, gamma0, cutoff, t[-1], method)
    except NoRootError:
        estimate.t_d = None
    return estimate


def solve_decoherence_time(
    l0: float,
    delta: float,
    gamma0: float,
    cutoff: float,
    horizon: float,
    method: str = "numerical",
    rtol: float = 1e-6,
) -> float:
    """Solve ``A_int(t_D) = 1`` by bracketing then bisection on ``(0, horizon]``."""
    if gamma0 == 0.0:
        raise NoRootError("decoherence later than horizon (gamma0 = 0)")

    if method == "closed":
        def a_of(t):
            return float(aint_closed_form(l0, delta, t, gamma0, cutoff))
        lo = 1.0 / cutoff
    else:
        def a_of(t):
            return float(aint_numerical(l0, delta, [0.0, t], gamma0, cutoff)[1])
        lo = 0.0

    if a_of(horizon) < 1.0:
        raise NoRootError(f"decoherence later than horizon t = {horizon:.6g}")
    # expand the lower end geometrically from the horizon so the bracket is tight
    hi = horizon
    probe = horizon / 2.0
    while probe > max(lo, 1e-12 * horizon) and a_of(probe) >= 1.0:
        hi = probe
        probe /= 2.0
    lo = max(lo, probe)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if a_of(mid) >= 1.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
