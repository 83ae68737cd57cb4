import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdwell import config, io, presets


def test_defaults_validate():
    cfg = config.validate({})
    assert cfg == config.defaults()


def test_errors_name_every_field():
    with pytest.raises(config.ConfigError) as exc:
        config.validate({"potential": {"omega": -1.0, "colour": 3}, "warp": {}, "basis": {"n_basis": "x"}})
    msg = " ".join(exc.value.errors)
    for needle in ("potential.omega", "potential.colour", "warp", "basis.n_basis"):
        assert needle in msg


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e4), st.floats(0, 1), st.integers(2, 60))
def test_ini_and_json_round_trip(omega, v0, g0, n):
    cfg = config.merge(config.defaults(), {"potential.omega": omega, "potential.v0": v0,
                                           "environment": {"gamma0": g0}, "basis.n_basis": n})
    assert config.loads(config.dumps(cfg)) == cfg
    assert config.from_json(config.to_json(cfg)) == cfg


def test_load_from_files(tmp_path):
    cfg = presets.preset("zerot-paper")
    (tmp_path / "a.ini").write_text(config.dumps(cfg))
    (tmp_path / "b.json").write_text(config.to_json(cfg))
    assert config.load(tmp_path / "a.ini") == cfg == config.load(tmp_path / "b.json")
    with pytest.raises(config.ConfigError):
        config.loads("not an ini")


def test_presets():
    assert presets.available() == ["classical-paper", "hitemp-paper", "zerot-paper"]
    hot = presets.preset("hitemp-paper")
    assert hot["environment"]["gamma0"] * hot["environment"]["temperature"] == pytest.approx(presets.HITEMP_GAMMA0_T)
    with pytest.raises(config.ConfigError, match="available"):
        presets.preset("nope")


def test_series_round_trip(tmp_path):
    cols = {"t": np.linspace(0, 1, 7), "p_left": np.random.default_rng(1).random(7)}
    path = io.write_series(tmp_path / "s.csv", cols, "abc123")
    assert path.read_text().startswith("# manifest=abc123")
    back = io.read_series(path)
    for k in cols:
        np.testing.assert_array_equal(back[k], cols[k])
    with pytest.raises(ValueError):
        io.write_series(tmp_path / "bad.csv", {"a": [1.0], "b": [1.0, 2.0]})


def test_grid_and_manifest(tmp_path):
    vals = np.arange(12.0).reshape(3, 4)
    io.write_grid(tmp_path / "g.npz", vals, {"x_min": -1, "x_max": 1, "p_min": -2, "p_max": 2, "t": 0.5})
    back, head = io.read_grid(tmp_path / "g.npz")
    np.testing.assert_array_equal(back, vals)
    assert head["t"] == 0.5
    m = io.RunManifest("demo", config.defaults(), validity={"ok": True})
    io.write_manifest(tmp_path / "manifest.json", m)
    d = io.read_manifest(tmp_path / "manifest.json")
    assert d["config_hash"] == m.config_hash and d["validity"] == {"ok": True}
    other = io.RunManifest("demo", config.merge(config.defaults(), {"potential.v0": 1.0}))
    assert other.config_hash != m.config_hash


def test_plotdata(tmp_path):
    io.write_series(tmp_path / "series.csv", {"t": [0.0, 1.0], "t_over_tau": [0.0, 0.5], "p_left": [1.0, 0.7],
                                              "energy": [-3.0, -2.0]})
    io.write_grid(tmp_path / "wigner_0.000tau.npz", np.ones((2, 3)),
                  {"x_min": -1, "x_max": 1, "p_min": -2, "p_max": 2})
    names = sorted(p.name for p in io.emit_plotdata(tmp_path))
    assert names == ["plot_energy.csv", "plot_p_left.csv", "plot_wigner_0.000tau.csv"]
    grid = io.read_series(tmp_path / "plot_wigner_0.000tau.csv")
    assert grid["p"].tolist() == [-2.0, 0.0, 2.0, -2.0, 0.0, 2.0]
    with pytest.raises(FileNotFoundError, match="missing input"):
        io.emit_plotdata(tmp_path / "empty")
