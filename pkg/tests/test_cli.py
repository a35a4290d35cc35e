"""Tests for the potdep CLI."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
import typer
from typer.testing import CliRunner

from potdep.cli import app, parse_gamma_prior, parse_sigma_prior
from potdep.rng import stream

runner = CliRunner()


@pytest.fixture(autouse=True)
def isolated_config(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))


@pytest.fixture
def series_csv(tmp_path: Path) -> Path:
    path = tmp_path / "series.csv"
    values = stream(12, 0).exponential(size=500)
    np.savetxt(path, values, header="loss", comments="", fmt="%.10f")
    return path


def test_cli_help():
    result = runner.invoke(app, ["--help"])
    assert result.exit_code == 0
    assert "Peaks-over-threshold" in result.stdout


def test_cli_config_show(tmp_path):
    config_path = tmp_path / "config.toml"
    config_path.write_text("seed = 7\n[tail]\nk = 40\n")

    result = runner.invoke(app, ["config", "show", "--config", str(config_path)])
    assert result.exit_code == 0
    assert "tail" in result.stdout
    assert "40" in result.stdout


def test_cli_config_validate_valid(tmp_path):
    config_path = tmp_path / "config.toml"
    config_path.write_text("mode = 'dynamic'\n[dynamic]\np = 2\n")

    result = runner.invoke(app, ["config", "validate", "--config", str(config_path)])
    assert result.exit_code == 0
    assert "Config valid" in result.stdout
    assert "dynamic" in result.stdout


def test_cli_config_validate_invalid(tmp_path):
    config_path = tmp_path / "config.toml"
    config_path.write_text("[mcmc]\niterations = 10\n")

    result = runner.invoke(app, ["config", "validate", "--config", str(config_path)])
    assert result.exit_code == 1
    assert "Config validation failed" in result.stderr


def test_parse_gamma_prior():
    assert parse_gamma_prior("normal:0.1,0.3") == {
        "gamma": "normal",
        "gamma_mean": 0.1,
        "gamma_sd": 0.3,
    }
    assert parse_gamma_prior("flat") == {"gamma": "flat"}
    assert parse_gamma_prior("flat:3") == {"gamma": "flat", "gamma_max": 3.0}
    assert parse_gamma_prior("fixed:0.2") == {"gamma": "fixed", "gamma_value": 0.2}
    for bad in ("normal:1", "beta:1,2", "fixed:x"):
        with pytest.raises(typer.BadParameter):
            parse_gamma_prior(bad)


def test_parse_sigma_prior():
    assert parse_sigma_prior("lognormal:0.5") == {"sigma": "lognormal", "sigma_sd": 0.5}
    assert parse_sigma_prior("vague:20") == {"sigma": "vague", "sigma_c": 20.0}
    assert parse_sigma_prior("flat") == {"sigma": "flat"}
    with pytest.raises(typer.BadParameter):
        parse_sigma_prior("flat:2")


def test_cli_fit_writes_report(series_csv, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        ["fit", "--input", str(series_csv), "--k", "50", "--deterministic", "--out", str(out)],
    )
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert report["status"] == "ok"
    assert report["results"]["stage"] == "fit"
    assert report["results"]["k"] == 50
    assert report["results"]["fit"]["converged"] is True
    assert report["results"]["data"]["column"] == "loss"


def test_cli_bad_extreme_level_exits_2(series_csv, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        app,
        ["fit", "--input", str(series_csv), "--k", "50", "--tau-e", "0.5", "--out", str(out)],
    )
    assert result.exit_code == 2
    assert json.loads(out.read_text())["error"]["code"] == "config_error"


def test_cli_invalid_flag_value_exits_2(series_csv):
    result = runner.invoke(app, ["fit", "--input", str(series_csv), "--tau-e", "1.5"])
    assert result.exit_code == 2


def test_cli_coverage_without_replications(tmp_path):
    out = tmp_path / "coverage.json"
    result = runner.invoke(app, ["coverage", "-N", "0", "--out", str(out)])
    assert result.exit_code == 0
    report = json.loads(out.read_text())
    assert report["mode"] == "coverage"
    assert report["results"]["cells"] == []
