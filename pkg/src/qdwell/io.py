"""Persistence: series CSV, grid files with headers, run manifests, plot data."""

from __future__ import annotations

import csv
import hashlib
import json
import platform
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

__all__ = [
    "RunManifest",
    "write_series",
    "read_series",
    "write_grid",
    "read_grid",
    "write_manifest",
    "read_manifest",
    "emit_plotdata",
]

_locks: dict[str, threading.Lock] = {}
_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    key = str(path.resolve())
    with _locks_guard:
        return _locks.setdefault(key, threading.Lock())


@dataclass
class RunManifest:
    """Everything needed to reproduce one run and interpret its files."""

    scenario: str
    config: dict
    code_version: str = __version__
    started: float = field(default_factory=time.time)
    wall_clock: float = 0.0
    validity: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    platform: str = field(default_factory=platform.platform)

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.config, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config_hash"] = self.config_hash
        return d


def write_series(path, columns: dict, manifest_hash: str | None = None) -> Path:
    """Write equal-length columns as CSV with full float precision.

    A leading ``# manifest=<hash>`` comment ties the file to its run.
    """
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    n = {len(c) for c in data}
    if len(n) > 1:
        raise ValueError(f"columns differ in length: {dict(zip(names, map(len, data)))}")
    with _lock_for(path), open(path, "w", newline="") as fh:
        if manifest_hash:
            fh.write(f"# manifest={manifest_hash}\n")
        w = csv.writer(fh)
        w.writerow(names)
        for row in zip(*data):
            w.writerow([repr(float(v)) if np.ndim(v) == 0 else v for v in row])
    return path


def read_series(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    names, body = rows[0], rows[1:]
    return {n: np.array([float(r[i]) for r in body]) for i, n in enumerate(names)}


def write_grid(path, values, header: dict) -> Path:
    """Store a dense grid with a JSON header (bounds, bins, time, ...) as ``.npz``."""
    path = Path(path)
    with _lock_for(path):
        np.savez(path, values=np.asarray(values), header=json.dumps(header, sort_keys=True))
    return path


def read_grid(path) -> tuple[np.ndarray, dict]:
    with np.load(path) as f:
        return f["values"], json.loads(str(f["header"]))


def write_manifest(path, manifest: RunManifest) -> Path:
    path = Path(path)
    with _lock_for(path):
        path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True, default=float))
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def emit_plotdata(run_dir) -> list[Path]:
    """Project stored run outputs onto one file per figure panel.

    Reads ``series.csv`` (and any ``wigner_*.npz``, ``histogram_*.npz``,
    ``scan_*.csv``) from ``run_dir`` and writes ``plot_*.csv`` files.

    Raises
    ------
    FileNotFoundError
        Naming the missing input.
    """
    run_dir = Path(run_dir)
    series_path = run_dir / "series.csv"
    scans = sorted(run_dir.glob("scan_*.csv"))
    if not series_path.exists() and not scans:
        raise FileNotFoundError(f"missing input: {series_path}")
    written = []
    if series_path.exists():
        s = read_series(series_path)
        t = s["t"]
        x = s["t_over_tau"] if "t_over_tau" in s else t
        written.append(write_series(run_dir / "plot_p_left.csv", {
            "t_over_tau": x, "p_left": s["p_left"],
            **({"p_left_closed": s["p_left_closed"]} if "p_left_closed" in s else {}),
            **({"entropy_ratio": s["entropy_ratio"]} if "entropy_ratio" in s else {}),
        }))
        if "energy" in s:
            written.append(write_series(run_dir / "plot_energy.csv", {"t_over_tau": x, "energy": s["energy"]}))
    for grid in sorted(run_dir.glob("wigner_*.npz")) + sorted(run_dir.glob("histogram_*.npz")):
        values, header = read_grid(grid)
        xs = np.linspace(header["x_min"], header["x_max"], values.shape[0])
        ps = np.linspace(header["p_min"], header["p_max"], values.shape[1])
        xx, pp = np.meshgrid(xs, ps, indexing="ij")
        written.append(write_series(run_dir / f"plot_{grid.stem}.csv",
                                    {"x": xx.ravel(), "p": pp.ravel(), "w": values.ravel()}))
    for scan in scans:
        with open(scan, newline="") as fh:
            rec = list(csv.DictReader(fh))
        ok = [r for r in rec if not r.get("error")]
        v = np.array([float(r["scan_value"]) for r in ok])
        ta = np.array([float(r["t_act"]) for r in ok])
        with np.errstate(divide="ignore", invalid="ignore"):
            written.append(write_series(run_dir / f"plot_{scan.stem}.csv", {
                "scan_value": v, "t_act": ta, "log10_scan_value": np.log10(v), "log10_t_act": np.log10(ta),
            }))
    return written
