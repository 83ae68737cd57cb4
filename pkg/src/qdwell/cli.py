"""Command-line entry point ``qdwell``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import fitting, io, langevin, planner, presets, rk, runner, spectrum, zerotemp

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_GUARD = 2, 3, 4

_NUMERICAL = (
    spectrum.ConvergenceError,
    spectrum.PrecisionError,
    rk.IntegrationError,
    langevin.DivergenceError,
    fitting.FitError,
    planner.NoRootError,
    FloatingPointError,
    np.linalg.LinAlgError,
)


def _common(p: argparse.ArgumentParser, scenario: bool = True):
    if scenario:
        p.add_argument("--config", help="preset name or .ini/.json file")
    p.add_argument("--omega", type=float)
    p.add_argument("--v0", type=float)
    p.add_argument("--grid", type=int, help="grid points")
    p.add_argument("-N", "--n-basis", type=int, dest="n_basis")
    p.add_argument("--precision", choices=["double", "extended"])
    p.add_argument("--out", type=Path, help="output directory")


def _env(p):
    p.add_argument("--gamma0", type=float)
    p.add_argument("--temperature", type=float)
    p.add_argument("--cutoff", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--t-end-over-tau", type=float, dest="t_end_over_tau")
    p.add_argument("--samples", type=int)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdwell", description="Open-system double-well dynamics.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenbasis, splitting and tunneling time")
    _common(p)

    p = sub.add_parser("plan", help="scenario parameters from a = tau/t_D, b = tau/t_th")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--omega", type=float)
    p.add_argument("--branch", choices=["high-T", "zero-T"], default="high-T")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("evolve-hitemp", help="high-temperature master equation")
    _common(p)
    _env(p)
    p.add_argument("--fail-on-guard", action="store_true")

    p = sub.add_parser("evolve-zerot", help="zero-temperature master equation")
    _common(p)
    _env(p)
    p.add_argument("--anomalous", choices=sorted(zerotemp.ANOMALOUS_SCALE))

    p = sub.add_parser("langevin", help="classical Langevin ensemble")
    _common(p)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--temperature", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--trajectories", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--threads", type=int)
    p.add_argument("--noise-variance-mode", choices=["fdt", "literal"], dest="noise_variance_mode")

    p = sub.add_parser("fit", help="fit P_left(t) from a series CSV")
    p.add_argument("series", type=Path)
    p.add_argument("--tau0", type=float, required=True)
    p.add_argument("--free-asymptote", action="store_true")

    for name, param in (("scan-lambda", "cutoff"), ("scan-gamma", "gamma0")):
        p = sub.add_parser(name, help=f"zero-T scan over {param} with fits")
        _common(p)
        _env(p)
        p.add_argument("--values", type=float, nargs="+", required=True)
        p.add_argument("--workers", type=int, default=1)
        p.set_defaults(scan_parameter=param)

    p = sub.add_parser("run", help="run a preset or configuration file end to end")
    p.add_argument("preset", help=f"one of {', '.join(presets.available())} or a config path")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("-N", "--n-basis", type=int, dest="n_basis")
    p.add_argument("--tol", type=float)
    p.add_argument("--fail-on-guard", action="store_true")

    p = sub.add_parser("plotdata", help="write plot_*.csv from a run directory")
    p.add_argument("run_dir", type=Path)
    return ap


_OVERRIDE_MAP = {
    "omega": ("potential", "omega"), "v0": ("potential", "v0"), "grid": ("grid", "points"),
    "n_basis": ("basis", "n_basis"), "precision": ("basis", "precision"),
    "gamma0": ("environment", "gamma0"), "temperature": ("environment", "temperature"),
    "cutoff": ("environment", "cutoff"), "tau": ("environment", "tau"), "anomalous": ("environment", "anomalous"),
    "tol": ("evolution", "tol"), "t_end_over_tau": ("evolution", "t_end_over_tau"),
    "samples": ("evolution", "samples"), "dt": ("langevin", "dt"),
    "trajectories": ("langevin", "n_trajectories"), "seed": ("langevin", "seed"),
    "t_end": ("langevin", "t_end"), "threads": ("langevin", "threads"),
    "noise_variance_mode": ("langevin", "noise_variance_mode"),
}


def _overrides(args) -> dict:
    out: dict = {}
    for key, (sec, name) in _OVERRIDE_MAP.items():
        val = getattr(args, key, None)
        if val is not None:
            out.setdefault(sec, {})[name] = val
    return out


def _config(args, kind: str) -> dict:
    base = runner.resolve_config(args.config) if getattr(args, "config", None) else cfgmod.defaults()
    over = _overrides(args)
    over.setdefault("scenario", {})["kind"] = kind
    if not getattr(args, "config", None):
        over["scenario"]["name"] = kind
    return cfgmod.merge(base, over)


def _report(manifest, series):
    print(json.dumps({"scenario": manifest.scenario, "validity": manifest.validity,
                      "derived": manifest.derived, "final_p_left": float(series["p_left"][-1]),
                      "outputs": manifest.outputs, "wall_clock": manifest.wall_clock},
                     indent=2, default=float))


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "spectrum":
        cfg = _config(args, "zerot")
        print(json.dumps(runner.run_spectrum(cfg), indent=2))
    elif cmd == "plan":
        plan = planner.plan_scenario(args.a, args.b, args.tau, args.omega, args.branch)
        print(plan.to_json() if args.json else plan.report())
    elif cmd == "evolve-hitemp":
        _report(*runner.run_hitemp(_config(args, "hitemp"), args.out, args.fail_on_guard))
    elif cmd == "evolve-zerot":
        _report(*runner.run_zerot(_config(args, "zerot"), args.out))
    elif cmd == "langevin":
        _report(*runner.run_classical(_config(args, "classical"), args.out))
    elif cmd == "fit":
        s = io.read_series(args.series)
        res = fitting.fit_pt(s["t"], s["p_left"], args.tau0, args.free_asymptote)
        print(json.dumps({"tau_fit": res.tau_fit, "t_act": res.t_act, "p_inf": res.p_inf,
                          "residual": res.residual, "oscillation_present": res.oscillation_present,
                          "stderr": res.stderr().tolist()}, indent=2))
    elif cmd in ("scan-lambda", "scan-gamma"):
        table = runner.run_scan(_config(args, "zerot"), args.scan_parameter, args.values, args.out, args.workers)
        for row in table.rows:
            print(row)
        change = table.regime_change()
        if change is not None:
            print(f"regime change at {args.scan_parameter} = {change}")
    elif cmd == "run":
        over = _overrides(args)
        manifest, series = runner.run_scenario(args.preset, args.out, over, args.fail_on_guard)
        if args.out is not None:
            io.emit_plotdata(args.out)
        _report(manifest, series)
    elif cmd == "plotdata":
        for path in io.emit_plotdata(args.run_dir):
            print(path)
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except cfgmod.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except runner.GuardTripped as exc:
        print(f"guard tripped: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except _NUMERICAL as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
