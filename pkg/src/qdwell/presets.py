"""Named parameter sets for the three reference scenarios."""

from __future__ import annotations

import math

from . import config

__all__ = ["PRESETS", "preset", "available"]

# Tunneling time of the (Omega=5, V0=100) well.  Its splitting lies below the
# double-precision noise floor of the eigensolver, so it enters as an input.
HITEMP_TAU = 4.63155403e10
HITEMP_A, HITEMP_B = 24.5, 0.6282
HITEMP_TEMPERATURE = 1.0e4
HITEMP_GAMMA0_T = HITEMP_A * 5.0 / (4.0 * HITEMP_TAU)

PRESETS = {
    "hitemp-paper": {
        "scenario": {"name": "hitemp-paper", "kind": "hitemp"},
        "potential": {"omega": 5.0, "v0": 100.0},
        "basis": {"n_basis": 40},
        "environment": {
            "gamma0": HITEMP_GAMMA0_T / HITEMP_TEMPERATURE,
            "temperature": HITEMP_TEMPERATURE,
            "cutoff": 10 * 102.237307,
            "a": HITEMP_A,
            "b": HITEMP_B,
            "tau": HITEMP_TAU,
        },
        "evolution": {"t_end_over_tau": 2.0, "samples": 401},
    },
    "classical-paper": {
        "scenario": {"name": "classical-paper", "kind": "classical"},
        "potential": {"omega": math.sqrt(12.0), "v0": 23.0},
        "environment": {"gamma0": 2.5e-9, "temperature": 1.0e7},
        "langevin": {
            "dt": 0.05 / math.sqrt(12.0),
            "n_trajectories": 100_000,
            "seed": 20050101,
            "t_end": 400.0,
            "record_every": 100,
            "snapshot_times": [0.0, 100.0, 200.0, 300.0, 390.0],
        },
    },
    "zerot-paper": {
        "scenario": {"name": "zerot-paper", "kind": "zerot"},
        "potential": {"omega": 100.0, "v0": 200.0},
        "basis": {"n_basis": 20},
        "environment": {"gamma0": 0.007897, "temperature": 0.0, "cutoff": 2000.0, "a": 10.0},
        "evolution": {"t_end_over_tau": 2.0, "samples": 201, "tol": 1e-8},
    },
}


def available() -> list[str]:
    return sorted(PRESETS)


def preset(name: str) -> dict:
    """Validated configuration of a named preset."""
    if name not in PRESETS:
        raise config.ConfigError([f"unknown preset {name!r}; available: {', '.join(available())}"])
    return config.validate(PRESETS[name])
