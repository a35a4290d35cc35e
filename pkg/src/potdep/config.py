"""potdep configuration - Pydantic v2 based, TOML on disk, POTDEP_* environment overrides."""

from __future__ import annotations

import tomllib
from pathlib import Path
from typing import Annotated, Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from potdep.names import (
    BlockMode,
    GammaPriorKind,
    Mode,
    ModelName,
    NaPolicy,
    PriorPlacement,
    SigmaPriorKind,
    Stage,
    VarianceMethod,
)

Probability = Annotated[float, Field(gt=0.0, lt=1.0)]


class DataConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    input: Path | None = None
    """CSV file holding the series."""
    column: str | int = 0
    """Column name, or zero-based column index."""
    na_policy: NaPolicy = NaPolicy.ERROR
    min_rows: Annotated[int, Field(ge=1)] = 10
    exog_input: Path | None = None
    """Optional CSV with exogenous regressors for ARMAX fits."""
    exog_columns: list[str | int] = Field(default_factory=list)


class TailConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: Annotated[int, Field(ge=1)] | None = None
    """Number of exceedances. Mutually exclusive with tau_i."""
    tau_i: Probability | None = None
    """Intermediate level 1 - k/n."""
    tau_e: list[Probability] = Field(default_factory=list)
    """Extreme levels. Empty means 1 - 1/n."""
    min_k: Annotated[int, Field(ge=1)] = 5

    @model_validator(mode="after")
    def k_or_tau_i(self) -> TailConfig:
        if self.k is not None and self.tau_i is not None:
            raise ValueError("Set either tail.k or tail.tau_i, not both.")
        return self


class BlockConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    m: Annotated[int, Field(ge=1)] = 50
    mode: BlockMode = BlockMode.SLIDING
    gap: Annotated[int, Field(ge=1)] | None = None
    """Disjoint-block gap l. None means ceil(m/10)."""
    grid_size: Annotated[int, Field(ge=8, le=4096)] = 64
    c_bound: Annotated[float, Field(gt=0.0)] = 10.0
    spd_repair: bool = True


class PriorConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: GammaPriorKind = GammaPriorKind.NORMAL
    gamma_mean: float = 0.0
    gamma_sd: Annotated[float, Field(gt=0.0)] = 0.4
    gamma_max: Annotated[float, Field(gt=-1.0)] = 5.0
    gamma_value: Annotated[float, Field(gt=-1.0)] = 0.0
    """Location of the point mass when gamma = 'fixed'."""
    sigma: SigmaPriorKind = SigmaPriorKind.LOGNORMAL
    sigma_sd: Annotated[float, Field(gt=0.0)] = 1.0
    sigma_c: Annotated[float, Field(gt=1.0)] = 10.0
    placement: PriorPlacement = PriorPlacement.STAR


class McmcConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    chains: Annotated[int, Field(ge=1, le=64)] = 2
    iterations: Annotated[int, Field(ge=100)] = 20_000
    burn_in_fraction: Probability = 0.5
    target_acceptance: Probability = 0.234
    adapt_start: Annotated[int, Field(ge=10)] = 200
    rhat_error: Annotated[float, Field(gt=1.0)] = 1.05
    rhat_clean: Annotated[float, Field(gt=1.0)] = 1.01
    workers: Annotated[int, Field(ge=1)] = 1

    @model_validator(mode="after")
    def rhat_thresholds_ordered(self) -> McmcConfig:
        if self.rhat_clean > self.rhat_error:
            raise ValueError("mcmc.rhat_clean must not exceed mcmc.rhat_error.")
        return self


class InferenceConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: Probability = 0.05
    variance_method: VarianceMethod = VarianceMethod.DELTA
    mc_draws: Annotated[int, Field(ge=100)] = 20_000
    stage: Stage = Stage.QUANTILE


class DynamicConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: Annotated[int, Field(ge=0, le=30)] = 1
    q: Annotated[int, Field(ge=0, le=30)] = 0
    include_mean: bool = True
    warmup: Annotated[int, Field(ge=0)] | None = None
    """Discarded warm-up length s_n. None means n_bar = n + ceil(sqrt(n))."""
    horizons: Annotated[int, Field(ge=1)] = 1
    max_horizon: Annotated[int, Field(ge=1)] = 24
    window: Annotated[int, Field(ge=20)] | None = None
    """Rolling-window length. None runs a single fit on the whole series."""
    step: Annotated[int, Field(ge=1)] = 1

    @model_validator(mode="after")
    def orders_nonzero(self) -> DynamicConfig:
        if self.p + self.q < 1:
            raise ValueError("dynamic.p + dynamic.q must be at least 1.")
        return self


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    models: list[ModelName] = Field(default_factory=lambda: [ModelName.AR1_T1])
    sizes: list[Annotated[int, Field(ge=20)]] = Field(default_factory=lambda: [2000])
    ks: list[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [100])
    replications: Annotated[int, Field(ge=0)] = 500
    burn_in: Annotated[int, Field(ge=500)] = 500
    workers: Annotated[int, Field(ge=1)] = 1
    m: Annotated[int, Field(ge=1)] = 50
    """Block length used in coverage runs."""
    m_list: list[Annotated[int, Field(ge=1)]] = Field(
        default_factory=lambda: [10, 25, 50, 100, 200, 300]
    )
    modes: list[BlockMode] = Field(
        default_factory=lambda: [BlockMode.SLIDING, BlockMode.DISJOINT]
    )
    oracle_size: Annotated[int, Field(ge=10_000)] = 10_000_000
    truth_n: Annotated[int, Field(ge=1000)] = 100_000
    truth_reps: Annotated[int, Field(ge=1)] = 20
    length: Annotated[int, Field(ge=1)] = 2000
    """Series length written by simulate mode."""
    full_grid: bool = False
    """Run the complete n x k grid with 5000 replications instead of the configured cells."""

    @field_validator("models")
    @classmethod
    def models_unique(cls, v: list[ModelName]) -> list[ModelName]:
        if len(set(v)) != len(v):
            raise ValueError("sim.models contains duplicates.")
        return v


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    out: Path | None = None
    """JSON report path. None writes to stdout."""
    draws_csv: Path | None = None
    plot_data: Path | None = None
    """Tidy CSV for external plotting (coverage and sigma-experiment tables)."""
    deterministic: bool = False
    """Zero wall-clock timings so identical runs give identical reports."""


class AnalysisConfig(BaseSettings):
    model_config = SettingsConfigDict(
        frozen=True,
        env_prefix="POTDEP_",
        env_nested_delimiter="__",
        extra="forbid",
    )

    mode: Mode = Mode.MARGINAL
    seed: Annotated[int, Field(ge=0, lt=2**63)] = 0
    data: DataConfig = Field(default_factory=DataConfig)
    tail: TailConfig = Field(default_factory=TailConfig)
    blocks: BlockConfig = Field(default_factory=BlockConfig)
    prior: PriorConfig = Field(default_factory=PriorConfig)
    mcmc: McmcConfig = Field(default_factory=McmcConfig)
    inference: InferenceConfig = Field(default_factory=InferenceConfig)
    dynamic: DynamicConfig = Field(default_factory=DynamicConfig)
    sim: SimConfig = Field(default_factory=SimConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @classmethod
    def load(cls, path: Path | None = None) -> AnalysisConfig:
        """Load config from TOML file. Uses defaults if file not found."""
        from potdep.paths import default_config_path

        config_path = path or default_config_path()
        if not config_path.exists():
            return cls()

        with config_path.open("rb") as f:
            data = tomllib.load(f)

        return cls(**data)

    @classmethod
    def load_with_override(
        cls,
        base: Path | None = None,
        override: Path | None = None,
        flags: dict[str, Any] | None = None,
    ) -> AnalysisConfig:
        """Load base config, merge an override TOML, then command-line flags on top."""
        from potdep.paths import default_config_path

        base_path = base or default_config_path()
        base_data: dict[str, Any] = {}
        if base_path.exists():
            with base_path.open("rb") as f:
                base_data = tomllib.load(f)

        if override and override.exists():
            with override.open("rb") as f:
                override_data = tomllib.load(f)
            base_data = deep_merge(base_data, override_data)

        if flags:
            base_data = deep_merge(base_data, flags)

        return cls(**base_data)


def deep_merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge override into base."""
    result: dict[str, Any] = dict(base)
    for key, value in override.items():
        base_value = result.get(key)
        if isinstance(base_value, dict) and isinstance(value, dict):
            result[key] = deep_merge(base_value, value)
        else:
            result[key] = value
    return result
