import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import pytest

from potdep.config import AnalysisConfig, TailConfig
from potdep.errors import ConfigError
from potdep.names import Mode, ModelName
from potdep.runner import check_blocks, check_levels, resolve_k, run, to_builtin


def _config(**sections: Any) -> AnalysisConfig:
    base: dict[str, Any] = {
        "sim": {"models": [ModelName.IID_EXPONENTIAL], "length": 2000},
        "mcmc": {"iterations": 6000},
        "inference": {"mc_draws": 1000},
        "output": {"deterministic": True},
    }
    base.update(sections)
    return AnalysisConfig(**base)


@pytest.mark.parametrize(
    ("tail", "k"),
    [(TailConfig(k=50), 50), (TailConfig(tau_i=0.95), 50), (TailConfig(), 50)],
)
def test_resolve_k(tail: TailConfig, k: int) -> None:
    assert resolve_k(tail, 1000) == k


def test_resolve_k_bounds() -> None:
    with pytest.raises(ConfigError):
        resolve_k(TailConfig(k=1000), 1000)
    with pytest.raises(ConfigError):
        resolve_k(TailConfig(k=3), 1000)


def test_level_and_block_checks() -> None:
    check_levels([0.999], 1000, 50)
    with pytest.raises(ConfigError):
        check_levels([0.999, 0.95], 1000, 50)
    check_blocks(250, 1000)
    with pytest.raises(ConfigError):
        check_blocks(251, 1000)


def test_to_builtin() -> None:
    out = to_builtin({"a": np.float64(1.5), "b": (np.arange(2), Mode.DYNAMIC), 3: Path("x")})
    assert out == {"a": 1.5, "b": [[0, 1], "dynamic"], "3": "x"}
    assert type(out["a"]) is float


def test_coverage_without_replications() -> None:
    report = run(_config(mode="coverage", sim={"replications": 0}))
    assert report.status == "ok"
    assert report.exit_code == 0
    assert report.results["cells"] == []


def test_extreme_level_below_intermediate_is_a_config_error() -> None:
    report = run(_config(sim={"length": 1000}, tail={"k": 100, "tau_e": [0.85]}))
    assert report.status == "error"
    assert report.error is not None
    assert report.error.code == "config_error"
    assert report.exit_code == 2


def test_missing_input_is_a_data_error(tmp_path: Path) -> None:
    report = run(_config(data={"input": tmp_path / "missing.csv"}))
    assert report.exit_code == 3
    assert report.results == {}


def test_marginal_run_is_deterministic(tmp_path: Path) -> None:
    cfg = _config(tail={"k": 100}, blocks={"m": 20})
    first = run(cfg)
    assert first.status == "ok", first.error
    assert first.results["k"] == 100
    assert first.results["fit"]["converged"]
    assert set(first.results["regions"]) == {"FCR", "BACR", "BCR"}
    assert first.results["quantiles"][0]["tau_e"] == pytest.approx(1.0 - 1.0 / 2000)
    assert "posterior" in first.diagnostics
    assert set(first.timings.values()) == {0.0}
    assert run(cfg).to_json() == first.to_json()
    json.loads(first.to_json())


def test_simulate_writes_long_format(tmp_path: Path) -> None:
    plot = tmp_path / "sim.csv"
    cfg = _config(
        mode="simulate",
        sim={"models": [ModelName.IID_EXPONENTIAL, ModelName.ARMA21_T5], "length": 100},
        output={"plot_data": plot, "deterministic": True},
    )
    report = run(cfg)
    assert report.status == "ok"
    assert set(report.results["models"]) == {"iid_exponential", "arma21_t5"}
    frame = pd.read_csv(plot)
    assert list(frame.columns) == ["model", "index", "value", "innovation"]
    assert len(frame) == 200
    assert frame.loc[frame["model"] == "iid_exponential", "innovation"].isna().all()
    assert frame.loc[frame["model"] == "arma21_t5", "innovation"].notna().all()
