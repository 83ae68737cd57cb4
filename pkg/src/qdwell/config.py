"""Run configuration: sectioned key-value files with a JSON mirror.

A configuration is a mapping ``section -> key -> value``.  Every key has a
declared type; unknown sections or keys and unparsable values are collected
and reported together with their ``section.key`` paths.
"""

from __future__ import annotations

import configparser
import copy
import io
import json
import math
from pathlib import Path

__all__ = ["ConfigError", "SCHEMA", "defaults", "validate", "loads", "load", "dumps", "to_json", "from_json", "merge"]


class ConfigError(ValueError):
    """Schema violations; ``errors`` lists one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


# section -> key -> (parser, default)
SCHEMA = {
    "scenario": {
        "name": (str, "custom"),
        "kind": (str, "zerot"),
    },
    "potential": {
        "omega": (float, 100.0),
        "v0": (float, 200.0),
    },
    "grid": {
        "points": (int, 4096),
        "half_width": (_opt_float, None),
        "stencil_order": (int, 6),
    },
    "basis": {
        "n_basis": (int, 20),
        "precision": (str, "double"),
    },
    "environment": {
        "gamma0": (float, 0.0),
        "temperature": (float, 0.0),
        "cutoff": (float, 1.0),
        "a": (_opt_float, None),
        "b": (_opt_float, None),
        "tau": (_opt_float, None),
        "anomalous": (str, "printed"),
    },
    "evolution": {
        "t_end": (_opt_float, None),
        "t_end_over_tau": (float, 2.0),
        "samples": (int, 401),
        "tol": (float, 1e-8),
        "guard_threshold": (float, 0.98),
        "snapshot_fractions": (_floats, [0.0, 0.1, 0.2, 0.5, 1.0]),
    },
    "langevin": {
        "dt": (_opt_float, None),
        "n_trajectories": (int, 100_000),
        "seed": (int, 0),
        "noise_variance_mode": (str, "fdt"),
        "threads": (int, 1),
        "t_end": (float, 800.0),
        "record_every": (int, 100),
        "snapshot_times": (_floats, [0.0, 100.0, 390.0]),
        "bins": (int, 256),
    },
    "output": {
        "wigner": (_bool, True),
        "wigner_bins": (int, 128),
    },
}

_CHOICES = {
    ("scenario", "kind"): ("zerot", "hitemp", "classical"),
    ("basis", "precision"): ("double", "extended"),
    ("environment", "anomalous"): ("printed", "kernel"),
    ("langevin", "noise_variance_mode"): ("fdt", "literal"),
}


def defaults() -> dict:
    return {sec: {k: copy.deepcopy(d) for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def validate(raw: dict) -> dict:
    """Type-convert ``raw`` against :data:`SCHEMA`, filling defaults.

    Raises
    ------
    ConfigError
        Listing every unknown or invalid field.
    """
    cfg = defaults()
    errors = []
    for sec, keys in raw.items():
        if sec not in SCHEMA:
            errors.append(f"{sec}: unknown section")
            continue
        for key, value in keys.items():
            if key not in SCHEMA[sec]:
                errors.append(f"{sec}.{key}: unknown key")
                continue
            parser = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = parser(value) if value is not None or parser is _opt_float else None
            except (TypeError, ValueError) as exc:
                errors.append(f"{sec}.{key}: {exc}")
    for (sec, key), allowed in _CHOICES.items():
        if cfg[sec][key] not in allowed:
            errors.append(f"{sec}.{key}: must be one of {', '.join(allowed)}")
    for sec, key in (("potential", "omega"), ("potential", "v0")):
        if not (isinstance(cfg[sec][key], float) and cfg[sec][key] > 0 and math.isfinite(cfg[sec][key])):
            errors.append(f"{sec}.{key}: must be positive")
    if cfg["environment"]["gamma0"] < 0:
        errors.append("environment.gamma0: must be non-negative")
    if cfg["basis"]["n_basis"] < 2:
        errors.append("basis.n_basis: must be at least 2")
    if errors:
        raise ConfigError(errors)
    return cfg


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return " ".join(repr(float(v)) for v in value)
    return str(value)


def dumps(cfg: dict) -> str:
    """Serialise to the sectioned text format; floats keep full precision."""
    parser = configparser.ConfigParser(interpolation=None)
    for sec in SCHEMA:
        parser[sec] = {k: _fmt(v) for k, v in cfg[sec].items()}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def loads(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc
    return validate({sec: dict(parser[sec]) for sec in parser.sections()})


def load(path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        return from_json(text)
    return loads(text)


def to_json(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True)


def from_json(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"json: {exc}"]) from exc
    return validate(raw)


def merge(cfg: dict, overrides: dict) -> dict:
    """Return a validated copy of ``cfg`` with overrides applied.

    Overrides are either ``{"section.key": value}`` or nested
    ``{"section": {"key": value}}``.
    """
    raw = copy.deepcopy(cfg)
    for path, value in overrides.items():
        if isinstance(value, dict):
            raw.setdefault(path, {}).update(value)
            continue
        sec, _, key = path.partition(".")
        raw.setdefault(sec, {})[key] = value
    return validate(raw)
