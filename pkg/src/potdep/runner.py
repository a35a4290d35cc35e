"""End-to-end execution of one configured analysis into a Report."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import ChainSettings
from potdep.config import AnalysisConfig, TailConfig
from potdep.dynamic.arma import ArmaSpec
from potdep.dynamic.quantiles import exceedance_backtest, h_step_quantile, rolling_quantile
from potdep.dynamic.residuals import default_warmup, order_gap_statistic
from potdep.errors import ConfigError
from potdep.io import ingest_csv, ingest_matrix
from potdep.names import Mode, Stage
from potdep.pipeline import MarginalAnalysis, MarginalSettings, analyze_marginal
from potdep.report import ErrorInfo, Report, Timings, WarningCollector, write_frame
from potdep.sim.experiments import (
    FULL_GRID_REPLICATIONS,
    CoverageSettings,
    coverage_experiment,
    full_grid,
    sigma_experiment,
)
from potdep.sim.models import ModelSpec, model_info, simulate
from potdep.sim.truths import TRUTHS_VERSION, true_values

logger = logging.getLogger(__name__)

DEFAULT_K_FRACTION = 20
"""Without tail.k or tail.tau_i, k = n // DEFAULT_K_FRACTION."""


def to_builtin(obj: Any) -> Any:
    """Recursively turn numpy scalars and arrays, enums and paths into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(key): to_builtin(value) for key, value in obj.items()}
    if isinstance(obj, list | tuple):
        return [to_builtin(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


# --- Data-dependent validation ---


def resolve_k(tail: TailConfig, n: int) -> int:
    if tail.k is not None:
        k = tail.k
    elif tail.tau_i is not None:
        k = int(round(n * (1.0 - tail.tau_i)))
    else:
        k = n // DEFAULT_K_FRACTION
    if not tail.min_k <= k < n:
        raise ConfigError(f"k={k} must lie in [{tail.min_k}, n) for n={n}")
    return k


def check_levels(tau_e: Sequence[float], n: int, k: int) -> None:
    tau_i = 1.0 - k / n
    for tau in tau_e:
        if tau <= tau_i:
            raise ConfigError(f"tau_e={tau} must exceed 1 - k/n = {tau_i} (n={n}, k={k})")


def check_blocks(m: int, n: int) -> None:
    if m > n / 4:
        raise ConfigError(f"block length m={m} exceeds n/4 for n={n}")


@dataclass
class RunContext:
    config: AnalysisConfig
    timings: Timings
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Series:
    values: NDArray[np.float64]
    source: dict[str, Any]
    innovations: NDArray[np.float64] | None = None


def _load_series(cfg: AnalysisConfig) -> Series:
    """The configured CSV column, or the first sim model when no input is set."""
    data = cfg.data
    if data.input is not None:
        loaded = ingest_csv(data.input, data.column, data.na_policy, data.min_rows)
        source = {
            "input": str(data.input),
            "column": loaded.column,
            "rows": len(loaded),
            "dropped": loaded.dropped,
        }
        return Series(loaded.values, source)
    model = cfg.sim.models[0]
    n = cfg.sim.length
    sim = simulate(ModelSpec(model, n, cfg.seed, cfg.sim.burn_in))
    logger.info("No input file; simulated %d observations of %s", n, model)
    return Series(sim.values, {"model": model, "rows": n}, sim.innovations)


def _sim_grid(cfg: AnalysisConfig) -> list[tuple[int, int]]:
    if cfg.sim.full_grid:
        return full_grid()
    grid = [(n, k) for n in cfg.sim.sizes for k in cfg.sim.ks]
    for n, k in grid:
        if k >= n:
            raise ConfigError(f"sim grid cell k={k} must be smaller than n={n}")
    return grid


# --- Modes ---


def _write_marginal_outputs(cfg: AnalysisConfig, analysis: MarginalAnalysis) -> None:
    out = cfg.output
    draws = analysis.adjusted_draws
    if out.draws_csv is not None and draws is not None:
        first = analysis.quantiles[0].adjusted if analysis.quantiles else None
        out.draws_csv.parent.mkdir(parents=True, exist_ok=True)
        draws.to_csv(out.draws_csv, None if first is None else first.q_draws)
    table = analysis.covariance.table if analysis.covariance is not None else None
    if out.plot_data is not None and table is not None:
        write_frame(table.to_frame(), out.plot_data)


def _marginal(ctx: RunContext) -> dict[str, Any]:
    cfg = ctx.config
    with ctx.timings.stage("load"):
        series = _load_series(cfg)
    n = series.values.size
    k = resolve_k(cfg.tail, n)
    check_levels(cfg.tail.tau_e, n, k)
    settings = MarginalSettings.from_config(cfg, k)
    if settings.reaches(Stage.COVARIANCE):
        check_blocks(cfg.blocks.m, n)

    with ctx.timings.stage("analysis"):
        analysis = analyze_marginal(
            series.values,
            settings,
            PriorSpec.from_config(cfg.prior),
            ChainSettings.from_config(cfg.mcmc),
            cfg.seed,
        )
    _write_marginal_outputs(cfg, analysis)
    results = analysis.to_dict()
    ctx.diagnostics["posterior"] = results.pop("posterior")
    return {"data": series.source, "stage": settings.stage, **results}


def _dynamic(ctx: RunContext) -> dict[str, Any]:
    cfg, dyn = ctx.config, ctx.config.dynamic
    with ctx.timings.stage("load"):
        series = _load_series(cfg)
        exog = (
            ingest_matrix(cfg.data.exog_input, cfg.data.exog_columns)
            if cfg.data.exog_input is not None
            else None
        )
    y = series.values
    spec = ArmaSpec.from_config(dyn, 0 if exog is None else exog.shape[1])
    prior = PriorSpec.from_config(cfg.prior)
    mcmc = ChainSettings.from_config(cfg.mcmc)

    n_bar = dyn.window or y.size
    # rolling windows always use the default warm-up of their own length
    if dyn.window is not None or dyn.warmup is None:
        s = default_warmup(n_bar)
    else:
        s = dyn.warmup
    if not 0 < s < n_bar:
        raise ConfigError(f"dynamic.warmup={s} must lie in (0, {n_bar})")
    n = n_bar - s
    k = resolve_k(cfg.tail, n)
    check_levels(cfg.tail.tau_e, n, k)
    check_blocks(cfg.blocks.m, n)
    settings = MarginalSettings.from_config(cfg, k)

    if dyn.window is not None:
        with ctx.timings.stage("rolling"):
            frame = rolling_quantile(
                y, spec, dyn.window, settings, prior, mcmc, exog, dyn.step, cfg.seed
            )
        if cfg.output.plot_data is not None:
            write_frame(frame, cfg.output.plot_data)
        return {
            "data": series.source,
            "window": dyn.window,
            "rolling": frame.to_dict(orient="records"),
        }

    with ctx.timings.stage("analysis"):
        analyses = h_step_quantile(
            y, spec, dyn.horizons, settings, prior, mcmc, exog, cfg.seed, s, dyn.max_horizon
        )
    first = analyses[0]
    horizons = [a.to_dict() for a in analyses]
    ctx.diagnostics["posterior"] = {
        f"h{h['horizon']}": h["residual_analysis"].pop("posterior") for h in horizons
    }
    if series.innovations is not None:
        ctx.diagnostics["order_gap_statistic"] = order_gap_statistic(
            first.residuals.residuals,
            series.innovations[s:],
            k,
            first.analysis.fit.params.sigma,
        )
    if cfg.output.draws_csv is not None and first.analysis.adjusted_draws is not None:
        q = first.quantiles[0].q_draws if first.quantiles else None
        cfg.output.draws_csv.parent.mkdir(parents=True, exist_ok=True)
        first.analysis.adjusted_draws.to_csv(cfg.output.draws_csv, q)
    return {
        "data": series.source,
        "spec": {"p": spec.p, "q": spec.q, "include_mean": spec.include_mean},
        "horizons": horizons,
        "backtest": [exceedance_backtest(y, first.residuals, q) for q in first.quantiles],
    }


def _coverage(ctx: RunContext) -> dict[str, Any]:
    cfg = ctx.config
    grid = _sim_grid(cfg)
    for n, _ in grid:
        check_blocks(cfg.sim.m, n)
    settings = CoverageSettings(
        alpha=cfg.inference.alpha,
        m=cfg.sim.m,
        mode=cfg.blocks.mode,
        variance_method=cfg.inference.variance_method,
        mc_draws=cfg.inference.mc_draws,
        burn_in=cfg.sim.burn_in,
        oracle_size=cfg.sim.oracle_size,
        seed=cfg.seed,
        prior=PriorSpec.from_config(cfg.prior),
        mcmc=ChainSettings.from_config(cfg.mcmc),
    )
    replications = FULL_GRID_REPLICATIONS if cfg.sim.full_grid else cfg.sim.replications
    with ctx.timings.stage("coverage"):
        report = coverage_experiment(
            cfg.sim.models, grid, replications, settings, workers=cfg.sim.workers
        )
    if cfg.output.plot_data is not None:
        write_frame(report.to_frame(), cfg.output.plot_data)
    return {"grid": grid, "replications": replications, **report.to_dict()}


def _sigma_experiment(ctx: RunContext) -> dict[str, Any]:
    cfg = ctx.config
    grid = _sim_grid(cfg)
    for n, _ in grid:
        check_blocks(max(cfg.sim.m_list), n)
    frames: list[pd.DataFrame] = []
    with ctx.timings.stage("sigma_experiment"):
        for model in cfg.sim.models:
            for n, k in grid:
                frames.append(
                    sigma_experiment(
                        model,
                        n,
                        k,
                        cfg.sim.m_list,
                        cfg.sim.replications,
                        cfg.sim.modes,
                        cfg.seed,
                        cfg.sim.burn_in,
                        cfg.sim.truth_n,
                        cfg.sim.truth_reps,
                    )
                )
    frame = pd.concat(frames, ignore_index=True)
    if cfg.output.plot_data is not None:
        write_frame(frame, cfg.output.plot_data)
    return {"rows": frame.to_dict(orient="records")}


def _simulate(ctx: RunContext) -> dict[str, Any]:
    cfg = ctx.config
    frames: list[pd.DataFrame] = []
    summary: dict[str, Any] = {}
    with ctx.timings.stage("simulate"):
        for model in cfg.sim.models:
            sim = simulate(ModelSpec(model, cfg.sim.length, cfg.seed, cfg.sim.burn_in))
            innov = sim.innovations if sim.innovations is not None else np.nan
            frames.append(
                pd.DataFrame(
                    {
                        "model": str(model),
                        "index": np.arange(sim.values.size),
                        "value": sim.values,
                        "innovation": innov,
                    }
                )
            )
            summary[str(model)] = {
                "gamma0": model_info(model).gamma0,
                "n": int(sim.values.size),
                "mean": float(np.mean(sim.values)),
                "min": float(np.min(sim.values)),
                "max": float(np.max(sim.values)),
                "next_mean": sim.next_mean,
            }
    if cfg.output.plot_data is not None:
        write_frame(pd.concat(frames, ignore_index=True), cfg.output.plot_data)
    return {"models": summary}


_MODES: dict[Mode, Callable[[RunContext], dict[str, Any]]] = {
    Mode.MARGINAL: _marginal,
    Mode.DYNAMIC: _dynamic,
    Mode.COVERAGE: _coverage,
    Mode.SIGMA_EXPERIMENT: _sigma_experiment,
    Mode.SIMULATE: _simulate,
}


def _execute(
    config: AnalysisConfig, mode: str, body: Callable[[RunContext], dict[str, Any]]
) -> Report:
    ctx = RunContext(config=config, timings=Timings(config.output.deterministic))
    collector = WarningCollector()
    results: dict[str, Any] = {}
    error: ErrorInfo | None = None
    with collector.attached():
        try:
            results = body(ctx)
        except Exception as exc:
            error = ErrorInfo.from_exception(exc)
            if error.exit_code == 5:
                logger.exception("Run failed with an internal error")
            else:
                logger.error("%s: %s", error.type, error.message)
    return Report(
        mode=mode,
        status="ok" if error is None else "error",
        config=config.model_dump(mode="json"),
        results=to_builtin(results),
        diagnostics=to_builtin(ctx.diagnostics),
        warnings=collector.messages,
        timings=ctx.timings.values,
        error=error,
    )


def run(config: AnalysisConfig) -> Report:
    """Execute the configured mode; errors end up in the report, never raised."""
    logger.info("Running %s (seed %d)", config.mode, config.seed)
    return _execute(config, str(config.mode), _MODES[config.mode])


def regenerate_truths(config: AnalysisConfig, cache: Path | None = None) -> Report:
    """Recompute the oracle constants for every sim model and grid cell."""

    def body(ctx: RunContext) -> dict[str, Any]:
        cfg = ctx.config
        rows = []
        with ctx.timings.stage("truths"):
            for model in cfg.sim.models:
                for n, k in _sim_grid(cfg):
                    values = true_values(
                        model, n, k, cfg.sim.oracle_size, cfg.seed, cache=cache, refresh=True
                    )
                    rows.append({"model": model, "n": n, "k": k, **values.model_dump()})
        return {"version": TRUTHS_VERSION, "entries": rows}

    return _execute(config, "truths", body)
