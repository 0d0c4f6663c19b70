from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from sqzsim import cli, scenarios
from sqzsim.config import default_config_path
from sqzsim.fitting import FitError


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_list(capsys):
    assert run("list") == 0
    assert capsys.readouterr().out.split() == list(scenarios.SCENARIOS)


def test_unknown_scenario_is_usage_error(tmp_path, capsys):
    assert run("fig-99", "--out", tmp_path) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_bad_flag_is_usage_error(capsys):
    assert run("qpm-curve", "--frobnicate") == 2


def test_missing_out_is_usage_error():
    assert run("qpm-curve") == 2


def test_config_error_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(default_config_path().read_text().replace("eta_pct_per_W_cm2 = 1000.0", ""))
    assert run("qpm-curve", "--config", cfg, "--out", tmp_path / "o") == 1
    assert "squeezer.eta_pct_per_W_cm2" in capsys.readouterr().err


def test_override_error_exit_1(tmp_path, capsys):
    assert run("qpm-curve", "--out", tmp_path, "--set", "leakage.epsilon=2.0") == 1
    assert "leakage.epsilon" in capsys.readouterr().err


def test_fit_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise FitError("did not converge", {"iterations": 500})

    monkeypatch.setattr(scenarios, "fit_cal_curve", boom)
    assert run("lo-calibration", "--out", tmp_path) == 3
    assert "fit error" in capsys.readouterr().err


def test_validate_echo(capsys):
    assert run("validate") == 0
    out = capsys.readouterr().out
    assert "squeezer.eta_pct_per_W_cm2 = 1000.0" in out
    assert "lo.vpi_V = 28.6" in out
    assert "epsilon target = 4.0 %" in out
    assert "zeta = 20.0 %" in out


@pytest.mark.parametrize("name", list(scenarios.SCENARIOS))
def test_every_scenario_deterministic_and_complete(name, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(name, "--out", a) == 0
    assert run(name, "--out", b) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for fname in files:
        assert (a / fname).read_bytes() == (b / fname).read_bytes(), fname
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["schema_version"] == scenarios.MANIFEST_SCHEMA_VERSION
    assert manifest["scenario"] == name
    listed = {e["path"] for e in manifest["files"]}
    assert listed == set(files)
    assert manifest["parameters"]["squeezer.eta_pct_per_W_cm2"] == 1000.0
    for e in manifest["files"]:
        if e["kind"] != "manifest":
            data = (a / e["path"]).read_bytes()
            assert e["bytes"] == len(data)
            assert e["sha256"] == hashlib.sha256(data).hexdigest()


def test_seed_override_changes_stochastic_output(tmp_path):
    run("qpm-curve", "--out", tmp_path / "s0")
    run("qpm-curve", "--out", tmp_path / "s7", "--seed", 7)
    a = (tmp_path / "s0" / "qpm_curve.csv").read_bytes()
    b = (tmp_path / "s7" / "qpm_curve.csv").read_bytes()
    assert a != b
    assert json.loads((tmp_path / "s7" / "manifest.json").read_text())["seed"] == 7


def test_shot_noise_csv_columns(tmp_path):
    run("shot-noise-sweep", "--out", tmp_path)
    data = np.genfromtxt(tmp_path / "shot_noise.csv", delimiter=",", names=True)
    assert data.dtype.names == ("p_lo_mW", "integrated_noise_W", "integrated_noise_dBm")
    assert data["p_lo_mW"][0] == 0.0 and data["p_lo_mW"][-1] == pytest.approx(8.8)
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["r_squared"] > 0.9999


def test_phase_sweep_outputs_band(tmp_path):
    run("lo-phase-sweep", "--out", tmp_path)
    data = np.genfromtxt(tmp_path / "lo_phase_sweep.csv", delimiter=",", names=True)
    assert np.all(data["band_lower"] <= data["band_upper"])
    assert len(data) == 361
    assert (tmp_path / "lo_phase_sweep.svg").read_text().startswith("<svg")


def test_svg_can_be_disabled(tmp_path):
    assert run("loss-projection", "--out", tmp_path, "--set", 'scenario.loss-projection.outputs=["csv"]',
               "--set", "scenario.loss-projection.seed=6") == 0
    assert not list(Path(tmp_path).glob("*.svg"))


def test_grid_override(tmp_path):
    assert run("loss-projection", "--out", tmp_path, "--set", "scenario.loss-projection.seed=6",
               "--set", "scenario.loss-projection.grid=[0.0, 48.0, 96.0]") == 0
    data = np.genfromtxt(tmp_path / "loss_projection.csv", delimiter=",", names=True)
    assert data["onchip_mW"].tolist() == [0.0, 48.0, 96.0]


def test_empty_grid_rejected(tmp_path, capsys):
    assert run("loss-projection", "--out", tmp_path, "--set", "scenario.loss-projection.seed=6",
               "--set", "scenario.loss-projection.grid=[]") == 1
    assert "empty" in capsys.readouterr().err
