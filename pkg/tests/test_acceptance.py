"""Acceptance suite: one test per criterion, each printing a single verdict line.

The zero-temperature scans and the reference runs take several minutes each
on one core.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from qdwell import (
    fitting, hitemp, langevin, observables, planner, presets, runner, specfun, spectrum, zerotemp,
)

OMEGA, V0, G0, LAM = 100.0, 200.0, 0.007897, 2000.0
SCAN_N, SCAN_TOL, SCAN_HORIZON, SCAN_SAMPLES = 10, 1e-6, 2.0, 201


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return report


@pytest.fixture(scope="module")
def scan_basis():
    b = spectrum.diagonalize(spectrum.build_potential(OMEGA, V0), n_basis=SCAN_N)
    return b, spectrum.tunneling_time(b)


_traces = {}


def _trace(basis, tau, gamma0, cutoff):
    key = (gamma0, cutoff)
    if key not in _traces:
        t = np.linspace(0.0, SCAN_HORIZON * tau, SCAN_SAMPLES)
        out = runner.zerot_trace(basis, gamma0, cutoff, t, SCAN_TOL)
        _traces[key] = (out["t"], out["p_left"])
    return _traces[key]


def test_1_tunneling_time(verdict):
    t0 = time.perf_counter()
    b = spectrum.diagonalize(spectrum.build_potential(OMEGA, V0), n_basis=20)
    tau = spectrum.tunneling_time(b)
    inst = spectrum.instanton_estimate(b.potential)
    wall = time.perf_counter() - t0
    closed = 3 / 8 * math.sqrt(math.pi / 2 * OMEGA / V0) / OMEGA * math.exp(16 / 3 * V0 / OMEGA)
    ok = abs(tau / 158.27 - 1) <= 0.02 and abs(inst / closed - 1) <= 0.01 and abs(inst / 142.5 - 1) <= 0.01 and wall < 10
    verdict(1, ok, f"tau = {tau:.4f} (158.27 +- 2%), instanton = {inst:.3f} vs closed form {closed:.3f}, {wall:.2f} s")


def test_2_frequency_shift(verdict):
    ratio = zerotemp.frequency_shift_ratio(G0, LAM, OMEGA)
    late = zerotemp.eval_coefficients(np.array([0.0]), 1.0, G0, LAM).omega_shift2[0]
    ok = abs(ratio - 0.0032) <= 0.0002 and abs(abs(late) / OMEGA**2 - ratio) < 1e-12
    verdict(2, ok, f"|shift|/Omega^2 = {100 * ratio:.4f}% (0.32 +- 0.02%), coefficient at Lambda t = 2000: {100 * abs(late) / OMEGA**2:.4f}%")


def test_3_planner_closure(verdict):
    plan = planner.plan_scenario(24.5, 0.6282, presets.HITEMP_TAU, omega=5.0)
    r_d, r_th = plan.t_d / plan.tau, plan.t_th / plan.tau
    ok = (f"{plan.v0_over_omega:.3g}" == "20" and f"{r_d:.3g}" == f"{1 / 24.5:.3g}" == "0.0408"
          and f"{r_th:.3g}" == f"{1 / 0.6282:.3g}")
    verdict(3, ok, f"V0/Omega = {plan.v0_over_omega:.6f}, t_D/tau = {r_d:.4f}, t_th/tau = {r_th:.4f}, "
                   f"gamma0 T = {plan.gamma0_T:.3e}")


def test_4_classical_activation(verdict):
    cfg = presets.preset("classical-paper")
    t0 = time.perf_counter()
    _, series = runner.run_classical(cfg)
    wall = time.perf_counter() - t0
    p390 = float(np.interp(390.0, series["t"], series["p_left"]))
    e390 = float(np.interp(390.0, series["t"], series["energy"]))
    v0 = cfg["potential"]["v0"]
    # the barrier top is the energy origin, so the band is 10% of its height
    ok = (cfg["langevin"]["n_trajectories"] >= 1e5 and 0.65 <= p390 <= 0.75 and abs(e390) <= 0.1 * v0
          and wall < 300)
    verdict(4, ok, f"P_left(390) = {p390:.4f} in [0.65, 0.75], <H>(390) = {e390:.3f} (barrier 0 +- {0.1 * v0:.1f}), "
                   f"{wall:.0f} s on backend {langevin.BACKEND}")


def test_5_fokker_planck_oracle(verdict):
    omega, g0, temp, n = 1.3, 0.2, 0.8, 20_000
    well = langevin.HarmonicWell(omega)
    cfg = langevin.LangevinConfig(g0, temp, 0.002 / omega, n, seed=42)
    state = langevin.sample_initial(cfg, well)
    state.x += 1.5
    d = 2 * g0 * temp
    a = np.array([[0.0, 1.0], [-omega**2, -2 * g0]])
    q = np.diag([0.0, 2 * d])
    m0 = np.array([state.x.mean(), state.p.mean()])
    s0 = np.cov(np.vstack([state.x, state.p]), bias=True)

    def rhs(t, y):
        m, s = y[:2], y[2:].reshape(2, 2)
        return np.concatenate([a @ m, (a @ s + s @ a.T + q).ravel()])

    checkpoints = np.linspace(0.5, 10.0, 20)
    exact = integrate.solve_ivp(rhs, (0, checkpoints[-1]), np.concatenate([m0, s0.ravel()]), t_eval=checkpoints,
                                rtol=1e-11, atol=1e-13).y
    worst = 0.0
    for i, t in enumerate(checkpoints):
        langevin.evolve_ensemble(state, cfg, well, t, record_every=10**9)
        m, s = exact[:2, i], exact[2:, i].reshape(2, 2)
        x, p = state.x, state.p
        samples = {"x": (x, m[0]), "p": (p, m[1]),
                   "xx": ((x - m[0]) ** 2, s[0, 0]), "pp": ((p - m[1]) ** 2, s[1, 1]),
                   "xp": ((x - m[0]) * (p - m[1]), s[0, 1])}
        for v, want in samples.values():
            worst = max(worst, abs(v.mean() - want) / (v.std() / math.sqrt(n)))
    verdict(5, worst <= 5.0, f"largest moment deviation {worst:.2f} standard errors over 20 checkpoints (limit 5)")


def test_6_high_temperature_suite(verdict):
    # (i) structure of the reference generator
    cfg = presets.preset("hitemp-paper")
    big = runner.build_basis(cfg)
    env40 = hitemp.ThermalEnvironment(cfg["environment"]["gamma0"], cfg["environment"]["temperature"],
                                      cfg["environment"]["cutoff"])
    m40 = hitemp.build_superoperator(big, env40)
    trace_def, herm_def = m40.trace_defect(), m40.hermiticity_defect()
    ok_i = big.n_basis == 40 and trace_def <= 1e-10 and herm_def <= 1e-10

    # scaled analogue: V0/Omega = 4 well, a/b = 7 so the planner reproduces it
    basis = spectrum.diagonalize(spectrum.build_potential(5.0, 20.0), n_basis=16)
    tau = spectrum.tunneling_time(basis)
    plan = planner.plan_scenario(24.5, 3.5, tau, 5.0)
    temp = 1e4
    cutoff = 10 * float(np.max(np.abs(basis.delta)))
    rho0 = spectrum.project_initial_state(basis, "left").density_matrix()
    times = np.linspace(0, 3 * tau, 3001)

    closed = hitemp.evolve(hitemp.build_superoperator(basis, hitemp.ThermalEnvironment(0.0, temp, cutoff)),
                           basis, rho0, times)["p_left"]
    # downward crossings of 1/2; excited-doublet ripples are far faster than tau
    s = closed - 0.5
    idx = np.nonzero((s[:-1] > 0) & (s[1:] <= 0))[0]
    cross = times[idx] + s[idx] / (s[idx] - s[idx + 1]) * (times[idx + 1] - times[idx])
    cross = cross[np.concatenate([[True], np.diff(cross) > 0.5 * tau])]
    period = float(np.mean(np.diff(cross)))
    ok_ii = abs(period / (2 * tau) - 1) <= 0.05

    m = hitemp.build_superoperator(basis, hitemp.ThermalEnvironment(plan.gamma0_T / temp, temp, cutoff))
    snaps = [f * tau for f in (0.1, 0.2, 0.5, 1.0)]
    out = hitemp.evolve(m, basis, rho0, times, snapshot_times=snaps)
    p = out["p_left"]
    rise = float(np.max(np.diff(p)))
    trip = times[np.argmax(out["guard"])] if out["guard"].any() else math.inf
    window = [t for t in snaps if plan.t_d < t <= trip]
    neg = min(observables.wigner(out["snapshots"][t], basis).negativity() for t in window) if window else math.nan
    ok_iii = rise <= 1e-3 and abs(p[-1] - 0.5) < 1e-3 and bool(window) and neg > -1e-3
    ok_iv = trip < tau
    detail = (f"(i) N=40 trace {trace_def:.1e} herm {herm_def:.1e} {'ok' if ok_i else 'bad'}; "
              f"(ii) period/2tau = {period / (2 * tau):.4f} {'ok' if ok_ii else 'bad'}; "
              f"(iii) max rise {rise:.1e}, min W/max W = {neg:.2e} over {len(window)} snapshots in (t_D, guard] "
              f"{'ok' if ok_iii else 'bad'}; (iv) guard at {trip / tau:.3f} tau {'ok' if ok_iv else 'bad'}")
    verdict(6, ok_i and ok_ii and ok_iii and ok_iv, detail)


def test_7_zero_temperature_evolution(verdict, tmp_path):
    t0 = time.perf_counter()
    manifest, series = runner.run_scenario("zerot-paper", tmp_path)
    wall = time.perf_counter() - t0
    t, p = series["t_over_tau"], series["p_left"]
    near = np.abs(p - 0.5) <= 0.02
    reached = bool(near.any()) and t[np.argmax(near)] <= 2.0 + 1e-9
    settled = reached and bool(np.all(near[np.argmax(near):]))

    cfg = presets.preset("zerot-paper")
    basis = runner.build_basis(cfg)
    tau = spectrum.tunneling_time(basis)
    rho0 = spectrum.project_initial_state(basis, "left").density_matrix()
    free = zerotemp.integrate(zerotemp.ZeroTempModel(basis, 0.0, LAM), rho0, 2 * tau, tol=1e-8,
                              record_times=[0.0, 2 * tau], snapshot_times=[2 * tau])
    unitary = float(np.max(np.abs(free["snapshots"][2 * tau] - rho0 * np.exp(-1j * basis.delta * 2 * tau))))
    ok = reached and settled and unitary <= 1e-6 and wall < 1800
    verdict(7, ok, f"P_left(2 tau) = {p[-1]:.4f}, min P_left = {p.min():.4f}, within 0.02 of 1/2 from "
                   f"{t[np.argmax(near)] if near.any() else math.nan:.3f} tau and stays: {settled}; "
                   f"gamma0 = 0 deviation {unitary:.1e}; {wall:.0f} s")


def test_8_cutoff_scan(verdict, scan_basis):
    basis, tau = scan_basis
    dE = basis.splitting
    values = np.geomspace(dE, 10 * V0, 8)
    values = np.unique(np.concatenate([values, [V0 / 2, V0, 2 * V0]]))
    table = fitting.lambda_scan(values, lambda v: _trace(basis, tau, G0, v), tau)
    free = fitting.lambda_scan(values, lambda v: _trace(basis, tau, G0, v), tau, free_asymptote=True)
    lam = table.values("scan_value")
    t_act = table.values("t_act")
    osc = np.array([r.result is not None and r.result.oscillation_present for r in table.rows])
    below = lam < V0
    monotone = bool(np.all(np.diff(t_act[below]) < 0))
    change = table.regime_change()
    threshold_ok = change is not None and V0 / 2 <= change <= 2 * V0 and not np.any(osc[lam > 2 * V0])
    tau_fit = table.values("tau_fit")[osc]
    tau_ok = bool(np.all(np.abs(tau_fit / tau - 1) <= 0.05))
    p_inf = free.values("p_inf")
    pinf_ok = bool(np.all(np.abs(p_inf / 0.5 - 1) <= 0.008))
    rows = ", ".join(f"{v:.3g}:{ta:.0f}{'~' if o else ''}" for v, ta, o in zip(lam, t_act, osc))
    verdict(8, monotone and threshold_ok and tau_ok and pinf_ok,
            f"t_act monotone below V0: {monotone}; oscillation dropped at {change}; "
            f"tau_fit/tau in [{np.min(tau_fit / tau):.3f}, {np.max(tau_fit / tau):.3f}]; "
            f"free p_inf in [{np.min(p_inf):.4f}, {np.max(p_inf):.4f}]; Lambda:t_act (~ oscillating) {rows}")


def test_9_coupling_scan(verdict, scan_basis):
    basis, tau = scan_basis
    values = G0 * np.array([0.25, 0.5, 1.0, 2.0])
    table = fitting.gamma_scan(values, lambda g: _trace(basis, tau, g, 10 * V0), tau)
    slope, se = fitting.loglog_slope(table.values("scan_value"), table.values("t_act"))
    rows = ", ".join(f"{g:.4g}:{t:.0f}" for g, t in zip(table.values("scan_value"), table.values("t_act")))
    verdict(9, abs(slope + 1) <= 0.15, f"slope {slope:.3f} +- {se:.3f} (target -1 +- 0.15); gamma0:t_act {rows}")


def test_10_special_functions(verdict):
    mp.mp.dps = 30
    x = 10 ** np.random.default_rng(2024).uniform(-3, 3, 1000)
    pairs = {
        "Si": (specfun.si, mp.si), "Ci": (specfun.ci, mp.ci),
        "e^z E1": (specfun.scaled_e1, lambda v: mp.exp(v) * mp.e1(v)),
        "e^-z Ei": (specfun.scaled_ei, lambda v: mp.exp(-v) * mp.ei(v)),
    }
    worst = {}
    for name, (ours, ref) in pairs.items():
        want = np.array([float(ref(mp.mpf(v))) for v in x])
        worst[name] = float(np.max(np.abs(ours(x) - want) / np.abs(want)))

    def nu(s):
        z = LAM * s
        return 2 * G0 * LAM**2 / mp.pi * (mp.exp(z) * mp.e1(z) - mp.exp(-z) * mp.ei(z)) / 2

    mp.mp.dps = 25
    d_err = 0.0
    for lam_t in (0.05, 1.0, 7.0, 20.0):
        t = lam_t / LAM
        for delta in (0.0, 37.0, 150.0, 3000.0):
            got = zerotemp.eval_coefficients(np.array([delta]), t, G0, LAM).d[0]
            pts = sorted({0.0, t, *[v for v in (1 / LAM, 5 / LAM) if v < t],
                          *[k * math.pi / delta for k in range(1, 40) if delta and k * math.pi / delta < t]})
            want = float(mp.quad(lambda s: nu(s) * mp.cos(delta * s), pts))
            d_err = max(d_err, abs(got - want) / abs(want))
    ok = max(worst.values()) <= 1e-12 and d_err <= 1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(10, ok, f"max relative error {detail}; D vs quadrature {d_err:.1e}")
