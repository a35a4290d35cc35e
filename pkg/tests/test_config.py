from pathlib import Path

import pytest
from pydantic import ValidationError

from potdep.config import AnalysisConfig, deep_merge
from potdep.names import BlockMode, GammaPriorKind, Mode, SigmaPriorKind


@pytest.fixture(autouse=True)
def clean_env(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("POTDEP_SEED", raising=False)
    monkeypatch.delenv("POTDEP_MCMC__CHAINS", raising=False)


def test_analysis_config_defaults() -> None:
    config = AnalysisConfig()
    assert config.mode is Mode.MARGINAL
    assert config.seed == 0
    assert config.tail.k is None
    assert config.tail.tau_e == []
    assert config.blocks.m == 50
    assert config.blocks.mode is BlockMode.SLIDING
    assert config.prior.gamma is GammaPriorKind.NORMAL
    assert config.prior.sigma is SigmaPriorKind.LOGNORMAL
    assert config.mcmc.iterations == 20_000
    assert config.inference.alpha == 0.05
    assert config.dynamic.p == 1


def test_analysis_config_load_nonexistent(tmp_path: Path) -> None:
    # Should use defaults if file does not exist
    config = AnalysisConfig.load(tmp_path / "nonexistent.toml")
    assert config == AnalysisConfig()


def test_analysis_config_load_valid(tmp_path: Path) -> None:
    p = tmp_path / "config.toml"
    p.write_text("""
mode = "coverage"
seed = 17

[tail]
k = 80
tau_e = [0.999, 0.9999]

[blocks]
m = 25
mode = "disjoint"

[sim]
models = ["arch1", "clayton_exp"]
""")
    config = AnalysisConfig.load(p)
    assert config.mode is Mode.COVERAGE
    assert config.seed == 17
    assert config.tail.k == 80
    assert config.tail.tau_e == [0.999, 0.9999]
    assert config.blocks.mode is BlockMode.DISJOINT
    assert [str(m) for m in config.sim.models] == ["arch1", "clayton_exp"]


@pytest.mark.parametrize(
    "data",
    [
        {"mcmc": {"iterations": 10}},
        {"tail": {"k": 50, "tau_i": 0.95}},
        {"tail": {"tau_e": [1.0]}},
        {"mcmc": {"rhat_clean": 1.1, "rhat_error": 1.05}},
        {"dynamic": {"p": 0, "q": 0}},
        {"sim": {"models": ["arch1", "arch1"]}},
        {"unknown": 1},
    ],
)
def test_analysis_config_validation_error(data: dict) -> None:
    with pytest.raises(ValidationError):
        AnalysisConfig(**data)


def test_deep_merge() -> None:
    base = {"a": 1, "b": {"c": 2}}
    override = {"b": {"d": 3}, "e": 4}
    result = deep_merge(base, override)
    assert result == {"a": 1, "b": {"c": 2, "d": 3}, "e": 4}
    assert base == {"a": 1, "b": {"c": 2}}


def test_analysis_config_load_with_override(tmp_path: Path) -> None:
    base_p = tmp_path / "base.toml"
    base_p.write_text("""
seed = 3
[mcmc]
chains = 4
iterations = 5000
""")
    override_p = tmp_path / "override.toml"
    override_p.write_text("""
[mcmc]
iterations = 8000
""")
    flags = {"seed": 9, "tail": {"k": 120}}
    config = AnalysisConfig.load_with_override(base_p, override_p, flags)
    assert config.seed == 9
    assert config.mcmc.chains == 4
    assert config.mcmc.iterations == 8000
    assert config.tail.k == 120


def test_environment_overrides(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("POTDEP_SEED", "11")
    monkeypatch.setenv("POTDEP_MCMC__CHAINS", "3")
    config = AnalysisConfig()
    assert config.seed == 11
    assert config.mcmc.chains == 3
    assert config.mcmc.iterations == 20_000
