import json

import numpy as np
import pytest

from qdwell import cli, config, io, runner

SMALL_HOT = ["--omega", "5", "--v0", "20", "-N", "8", "--gamma0", "3.4e-11", "--temperature", "1e4",
             "--cutoff", "700", "--samples", "41"]
SMALL_COLD = ["--omega", "100", "--v0", "200", "-N", "10", "--gamma0", "0.007897", "--cutoff", "20",
              "--t-end-over-tau", "0.02", "--samples", "6", "--tol", "1e-6"]


def test_plan(capsys):
    assert cli.main(["plan", "--a", "24.5", "--b", "0.6282", "--tau", "4.63155403e10", "--omega", "5", "--json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["v0_over_omega"] == pytest.approx(20.0, rel=1e-3)


def test_spectrum(capsys):
    assert cli.main(["spectrum", "--omega", "100", "--v0", "200", "-N", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["tau"] == pytest.approx(158.27, rel=0.02)


def test_config_error_exit_code(capsys):
    assert cli.main(["spectrum", "--omega", "-1"]) == cli.EXIT_CONFIG
    assert "potential.omega" in capsys.readouterr().err
    assert cli.main(["run", "no-such-preset"]) == cli.EXIT_CONFIG


def test_numerical_exit_code(capsys):
    # the splitting of this well is below the eigensolver noise floor
    code = cli.main(["evolve-hitemp", "--omega", "5", "--v0", "100", "-N", "4", "--temperature", "1e4",
                     "--cutoff", "1e3", "--gamma0", "1e-12"])
    assert code == cli.EXIT_NUMERICAL
    assert "noise floor" in capsys.readouterr().err


def test_hitemp_run_and_guard(tmp_path, capsys):
    out = tmp_path / "hot"
    assert cli.main(["evolve-hitemp", *SMALL_HOT, "--out", str(out)]) == 0
    series = io.read_series(out / "series.csv")
    assert series["p_left"][0] > 0.99 and series["guard"][-1] == 1
    manifest = io.read_manifest(out / "manifest.json")
    assert manifest["validity"]["entropy_guard_tripped"]
    assert any(name.startswith("wigner_") for name in manifest["outputs"])
    assert config.load(out / "config.ini")["basis"]["n_basis"] == 8
    assert cli.main(["evolve-hitemp", *SMALL_HOT, "--fail-on-guard"]) == cli.EXIT_GUARD
    assert cli.main(["plotdata", str(out)]) == 0
    assert (out / "plot_p_left.csv").exists()


def test_zerot_run_and_fit(tmp_path, capsys):
    out = tmp_path / "cold"
    assert cli.main(["evolve-zerot", *SMALL_COLD, "--out", str(out)]) == 0
    s = io.read_series(out / "series.csv")
    np.testing.assert_allclose(s["trace"], 1.0, atol=1e-8)
    capsys.readouterr()
    t = np.linspace(0, 600, 200)
    io.write_series(tmp_path / "synthetic.csv", {"t": t, "p_left": 0.5 + 0.5 * np.cos(np.pi * t / 158.27) * np.exp(-t / 400)})
    assert cli.main(["fit", str(tmp_path / "synthetic.csv"), "--tau0", "150"]) == 0
    assert json.loads(capsys.readouterr().out)["t_act"] == pytest.approx(400, rel=1e-6)


def test_langevin_run(tmp_path):
    out = tmp_path / "classical"
    assert cli.main(["langevin", "--config", "classical-paper", "--trajectories", "500", "--t-end", "5",
                     "--out", str(out)]) == 0
    manifest = io.read_manifest(out / "manifest.json")
    assert manifest["derived"]["t_th"] == pytest.approx(390.7, abs=0.1)
    assert "histogram_t0.npz" in manifest["outputs"]
    values, header = io.read_grid(out / "histogram_t0.npz")
    assert values.sum() == 500 and header["x_min"] < 0


def test_scan(tmp_path, capsys):
    assert cli.main(["scan-gamma", *SMALL_COLD, "--values", "0.001", "0.002", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "scan_gamma0.csv").exists()


def test_run_scenario_overrides(tmp_path):
    cfg = runner.resolve_config("zerot-paper")
    assert cfg["basis"]["n_basis"] == 20
    path = tmp_path / "cfg.json"
    path.write_text(config.to_json(config.merge(cfg, {"evolution": {"t_end_over_tau": 0.01, "samples": 3,
                                                                     "tol": 1e-5, "snapshot_fractions": [0.0]}})))
    manifest, series = runner.run_scenario(path, tmp_path / "o", {"basis": {"n_basis": 10}})
    assert manifest.config["basis"]["n_basis"] == 10
    assert len(series["t"]) == 3
    assert (tmp_path / "o" / "wigner_0.000tau.npz").exists()


def test_replay_from_written_config_is_bit_identical(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    assert cli.main(["langevin", "--config", "classical-paper", "--trajectories", "300", "--t-end", "3",
                     "--out", str(first)]) == 0
    assert cli.main(["run", str(first / "config.json"), "--out", str(second)]) == 0
    for name in ("series.csv", "config.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert io.read_manifest(first / "manifest.json")["config_hash"] == \
        io.read_manifest(second / "manifest.json")["config_hash"]
