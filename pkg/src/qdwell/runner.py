"""End-to-end scenario execution tying the physics modules to files on disk."""

from __future__ import annotations

import logging
import time
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fitting, hitemp, io, langevin, observables, planner, presets, spectrum, zerotemp

logger = logging.getLogger(__name__)

__all__ = [
    "GuardTripped",
    "build_basis",
    "resolve_tau",
    "run_spectrum",
    "run_plan",
    "run_hitemp",
    "run_zerot",
    "run_classical",
    "zerot_trace",
    "run_scan",
    "run_scenario",
    "resolve_config",
]


class GuardTripped(RuntimeError):
    """Raised only on request when a validity guard trips."""


def resolve_config(name_or_path) -> dict:
    """Preset name or path to a ``.ini``/``.json`` configuration."""
    if str(name_or_path) in presets.PRESETS:
        return presets.preset(str(name_or_path))
    path = Path(name_or_path)
    if not path.exists():
        raise cfgmod.ConfigError(
            [f"unknown preset {str(name_or_path)!r}; available: {', '.join(presets.available())}"]
        )
    return cfgmod.load(path)


def _potential(cfg):
    return spectrum.build_potential(cfg["potential"]["omega"], cfg["potential"]["v0"])


def build_basis(cfg) -> spectrum.EigenBasis:
    g = cfg["grid"]
    grid = spectrum.GridSpec(g["points"], g["half_width"], g["stencil_order"])
    return spectrum.diagonalize(_potential(cfg), grid, cfg["basis"]["n_basis"], cfg["basis"]["precision"])


def resolve_tau(cfg, basis) -> tuple[float, str]:
    """Configured ``tau`` if present, else ``3/(E1 - E0)`` from the basis."""
    tau = cfg["environment"]["tau"]
    if tau is not None:
        return tau, "config"
    return spectrum.tunneling_time(basis), "spectrum"


def run_spectrum(cfg) -> dict:
    basis = build_basis(cfg)
    pot = basis.potential
    out = {
        "omega": pot.omega, "v0": pot.v0, "lambda": pot.lam, "x0": pot.x0, "n": pot.n_states,
        "splitting": basis.splitting, "noise_floor": basis.noise_floor,
        "energies": basis.energies.tolist(),
    }
    try:
        out["tau"] = spectrum.tunneling_time(basis)
    except spectrum.PrecisionError as exc:
        out["tau"] = None
        out["tau_note"] = str(exc)
    try:
        out["tau_instanton"] = spectrum.instanton_estimate(pot)
    except ValueError as exc:
        out["tau_instanton"] = None
        out["tau_instanton_note"] = str(exc)
    return out


def run_plan(cfg, tau: float | None = None) -> planner.ScenarioPlan:
    env = cfg["environment"]
    kind = cfg["scenario"]["kind"]
    a = env["a"] if env["a"] is not None else 1.0
    b = env["b"] if env["b"] is not None else 1.0
    tau = tau if tau is not None else env["tau"]
    if tau is None:
        tau, _ = resolve_tau(cfg, build_basis(cfg))
    branch = "zero-T" if kind == "zerot" else "high-T"
    return planner.plan_scenario(a, b, tau, cfg["potential"]["omega"], branch)


def _times(cfg, tau):
    ev = cfg["evolution"]
    t_end = ev["t_end"] if ev["t_end"] is not None else ev["t_end_over_tau"] * tau
    return np.linspace(0.0, t_end, ev["samples"])


def _wigner_files(outdir, basis, snapshots, tau, bins, manifest):
    for t, rho in sorted(snapshots.items()):
        try:
            w = observables.wigner(rho, basis, x_bins=bins, t=t)
        except observables.AliasingError as exc:
            logger.warning("wigner at t=%g skipped: %s", t, exc)
            continue
        name = f"wigner_{t / tau:.3f}tau.npz"
        io.write_grid(outdir / name, w.values, {
            "t": t, "t_over_tau": t / tau, "x_min": float(w.x[0]), "x_max": float(w.x[-1]),
            "p_min": float(w.p[0]), "p_max": float(w.p[-1]), "x_bins": len(w.x), "p_bins": len(w.p),
            "manifest": manifest.config_hash,
        })
        manifest.outputs.append(name)


def run_hitemp(cfg, outdir=None, fail_on_guard: bool = False):
    """Exact propagation of the high-temperature master equation."""
    t_start = time.time()
    basis = build_basis(cfg)
    tau, tau_source = resolve_tau(cfg, basis)
    env_cfg = cfg["environment"]
    gamma0, temp = env_cfg["gamma0"], env_cfg["temperature"]
    if gamma0 == 0.0 and env_cfg["a"] is not None:
        temp = temp or 1e4
        gamma0 = planner.plan_scenario(env_cfg["a"], env_cfg["b"] or 1.0, tau, basis.potential.omega).gamma0_T / temp
    env = hitemp.ThermalEnvironment(gamma0, temp, env_cfg["cutoff"])
    closed = hitemp.ThermalEnvironment(0.0, temp, env_cfg["cutoff"])
    times = _times(cfg, tau)
    rho0 = spectrum.project_initial_state(basis, "left").density_matrix()
    m = hitemp.build_superoperator(basis, env)
    snaps = [f * tau for f in cfg["evolution"]["snapshot_fractions"]]
    res = hitemp.evolve(m, basis, rho0, times, snaps, cfg["evolution"]["guard_threshold"])
    ref = hitemp.evolve(hitemp.build_superoperator(basis, closed), basis, rho0, times)
    manifest = io.RunManifest(cfg["scenario"]["name"], cfg)
    manifest.validity = {**m.flags, "perturbative": gamma0 < 1.0, "entropy_guard_tripped": bool(res["guard"][-1])}
    manifest.derived = {"tau": tau, "tau_source": tau_source, "gamma0": gamma0, "temperature": temp,
                        "gamma0_T": gamma0 * temp, "t_D": planner.decoherence_time_hiT(basis.potential.omega, gamma0 * temp)
                        if gamma0 > 0 else None, "eig_condition": m.condition, "expm_fallback": m.fallback_used}
    series = {"t": times, "t_over_tau": times / tau, "p_left": res["p_left"], "p_left_closed": ref["p_left"],
              "entropy_ratio": res["entropy_ratio"], "energy": res["energy"], "guard": res["guard"]}
    _finish(outdir, manifest, series, basis, res["snapshots"], tau, cfg, t_start)
    if fail_on_guard and res["guard"][-1]:
        raise GuardTripped("entropy guard tripped inside the requested window")
    return manifest, series


def zerot_trace(basis, gamma0, cutoff, times, tol=1e-8, anomalous="printed", snapshot_times=()):
    """Zero-temperature run from the left-well packet; returns the integrator output dict."""
    rho0 = spectrum.project_initial_state(basis, "left").density_matrix()
    model = zerotemp.ZeroTempModel(basis, gamma0, cutoff, anomalous)
    q = basis.left_projector()
    obs = {
        "p_left": lambda r: observables.p_left(r, basis, q),
        "energy": lambda r: observables.mean_energy(r, basis),
        "entropy_ratio": lambda r: observables.linear_entropy(r)[1],
        "trace": lambda r: float(np.real(np.trace(r))),
        "min_population": lambda r: float(np.min(np.real(np.diag(r)))),
    }
    return zerotemp.integrate(model, rho0, times[-1], tol=tol, record_times=times, observers=obs,
                              snapshot_times=snapshot_times)


def run_zerot(cfg, outdir=None):
    """Adaptive integration of the zero-temperature master equation."""
    t_start = time.time()
    basis = build_basis(cfg)
    tau, tau_source = resolve_tau(cfg, basis)
    env = cfg["environment"]
    times = _times(cfg, tau)
    snaps = [f * tau for f in cfg["evolution"]["snapshot_fractions"] if f * tau <= times[-1]]
    out = zerot_trace(basis, env["gamma0"], env["cutoff"], times, cfg["evolution"]["tol"], env["anomalous"], snaps)
    manifest = io.RunManifest(cfg["scenario"]["name"], cfg)
    ratio = zerotemp.frequency_shift_ratio(env["gamma0"], env["cutoff"], basis.potential.omega)
    manifest.validity = {"perturbative": env["gamma0"] < 1.0, "frequency_shift_small": ratio < 0.01,
                         "populations_nonnegative": bool(np.min(out["min_population"]) >= -1e-6)}
    manifest.derived = {"tau": tau, "tau_source": tau_source, "frequency_shift_ratio": ratio,
                        "t_D_bound": planner.decoherence_bound_zeroT(env["gamma0"]) if env["gamma0"] > 0 else None,
                        "steps": out["stats"]["accepted"], "rejected": out["stats"]["rejected"]}
    series = {"t": out["t"], "t_over_tau": out["t"] / tau, "p_left": out["p_left"], "energy": out["energy"],
              "entropy_ratio": out["entropy_ratio"], "trace": out["trace"]}
    _finish(outdir, manifest, series, basis, out["snapshots"], tau, cfg, t_start)
    return manifest, series


def run_classical(cfg, outdir=None):
    """Langevin ensemble from the classical analogue of the initial packet."""
    t_start = time.time()
    pot = _potential(cfg)
    lv, env = cfg["langevin"], cfg["environment"]
    dt = lv["dt"] if lv["dt"] is not None else 0.05 / pot.omega
    lc = langevin.LangevinConfig(env["gamma0"], env["temperature"], dt, lv["n_trajectories"], lv["seed"],
                                 lv["noise_variance_mode"], threads=lv["threads"])
    state = langevin.sample_initial(lc, pot)
    res = langevin.evolve_ensemble(state, lc, pot, lv["t_end"], lv["record_every"], lv["snapshot_times"], lv["bins"])
    manifest = io.RunManifest(cfg["scenario"]["name"], cfg)
    manifest.validity = {"dt_resolves_well": dt <= 0.05 / pot.omega * (1 + 1e-12),
                         "divergent": int(lc.n_trajectories - res.n_alive[-1])}
    # ground level taken one quantum above the well bottom
    g_t = env["gamma0"] * env["temperature"]
    t_th = planner.thermal_activation_time(pot.v0, pot.omega, g_t) if g_t > 0 else None
    manifest.derived = {"t_th": t_th, "dt": dt, "backend": res.backend,
                        "noise_variance": langevin.noise_variance(lc)}
    series = {"t": res.t, "p_left": res.p_left, "energy": res.energy, "n_alive": res.n_alive}
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (xb, pb) = res.hist_bounds
        for t, h in sorted(res.histograms.items()):
            name = f"histogram_t{t:g}.npz"
            bx, bp = (xb[1] - xb[0]) / h.shape[0], (pb[1] - pb[0]) / h.shape[1]
            io.write_grid(outdir / name, h, {"t": t, "x_min": xb[0] + bx / 2, "x_max": xb[1] - bx / 2,
                                             "p_min": pb[0] + bp / 2, "p_max": pb[1] - bp / 2,
                                             "bins": list(h.shape), "manifest": manifest.config_hash})
            manifest.outputs.append(name)
    _finish(outdir, manifest, series, None, {}, None, cfg, t_start)
    return manifest, series


def _finish(outdir, manifest, series, basis, snapshots, tau, cfg, t_start):
    manifest.wall_clock = time.time() - t_start
    if outdir is None:
        return
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    io.write_series(outdir / "series.csv", series, manifest.config_hash)
    manifest.outputs.insert(0, "series.csv")
    if basis is not None and cfg["output"]["wigner"] and snapshots:
        _wigner_files(outdir, basis, snapshots, tau, cfg["output"]["wigner_bins"], manifest)
    (outdir / "config.ini").write_text(cfgmod.dumps(cfg))
    (outdir / "config.json").write_text(cfgmod.to_json(cfg))
    io.write_manifest(outdir / "manifest.json", manifest)


def run_scan(cfg, parameter: str, values, outdir=None, workers: int = 1) -> fitting.ScanTable:
    """Zero-temperature scan over ``cutoff`` or ``gamma0`` with a fit per point."""
    basis = build_basis(cfg)
    tau, _ = resolve_tau(cfg, basis)
    env = cfg["environment"]
    times = _times(cfg, tau)

    def runner(v):
        g = v if parameter == "gamma0" else env["gamma0"]
        lam = v if parameter == "cutoff" else env["cutoff"]
        out = zerot_trace(basis, g, lam, times, cfg["evolution"]["tol"], env["anomalous"])
        return out["t"], out["p_left"]

    table = fitting.run_scan(parameter, values, runner, tau, workers=workers)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        table.to_csv(outdir / f"scan_{parameter}.csv")
    return table


def run_scenario(name_or_path, outdir=None, overrides=None, fail_on_guard: bool = False):
    """Run a preset or configuration file; returns ``(manifest, series)``."""
    cfg = resolve_config(name_or_path)
    if overrides:
        cfg = cfgmod.merge(cfg, overrides)
    kind = cfg["scenario"]["kind"]
    if kind == "hitemp":
        return run_hitemp(cfg, outdir, fail_on_guard)
    if kind == "zerot":
        return run_zerot(cfg, outdir)
    if kind == "classical":
        return run_classical(cfg, outdir)
    raise cfgmod.ConfigError([f"scenario.kind: unsupported {kind!r}"])  # pragma: no cover - validated earlier
