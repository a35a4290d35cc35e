"""potdep CLI: typer-based entry point."""

from __future__ import annotations

import json
import logging
import tomllib
from pathlib import Path
from typing import Annotated, Any

import typer

from potdep.config import AnalysisConfig, deep_merge
from potdep.names import BlockMode, Mode, ModelName, Stage, VarianceMethod
from potdep.report import Report

app = typer.Typer(
    name="potdep",
    help="Peaks-over-threshold inference for serially dependent time series.",
    no_args_is_help=True,
)
config_app = typer.Typer(help="Configuration commands.")
app.add_typer(config_app, name="config")


ConfigOpt = Annotated[
    Path | None, typer.Option("--config", "-c", help="Path to config file.")
]
InputOpt = Annotated[Path | None, typer.Option("--input", "-i", help="CSV file with the series.")]
ColumnOpt = Annotated[
    str | None, typer.Option("--column", help="Column name or zero-based index.")
]
KOpt = Annotated[int | None, typer.Option("--k", help="Number of exceedances.")]
TauEOpt = Annotated[
    list[float] | None, typer.Option("--tau-e", help="Extreme level; repeatable.")
]
MOpt = Annotated[int | None, typer.Option("--m", help="Block length.")]
BlockOpt = Annotated[BlockMode | None, typer.Option("--block", help="Block scheme.")]
PriorGammaOpt = Annotated[
    str | None,
    typer.Option("--prior-gamma", help="normal:MEAN,SD | flat[:GAMMA_MAX] | fixed:VALUE"),
]
PriorSigmaOpt = Annotated[
    str | None, typer.Option("--prior-sigma", help="lognormal:SD | vague:C | flat")
]
ChainsOpt = Annotated[int | None, typer.Option("--chains", help="Number of MCMC chains.")]
ItersOpt = Annotated[int | None, typer.Option("--iters", help="Iterations per chain.")]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="Master random seed.")]
VarianceOpt = Annotated[
    VarianceMethod | None,
    typer.Option("--variance-method", help="Scalar variance of the quantile estimator."),
]
OutOpt = Annotated[
    Path | None, typer.Option("--out", "-o", help="JSON report path (default: stdout).")
]
DrawsOpt = Annotated[Path | None, typer.Option("--draws", help="CSV dump of posterior draws.")]
PlotDataOpt = Annotated[
    Path | None, typer.Option("--emit-plot-data", help="Tidy CSV for external plotting.")
]
DeterministicOpt = Annotated[
    bool, typer.Option("--deterministic", help="Zero timings for byte-identical reports.")
]
DebugOpt = Annotated[bool, typer.Option("--debug", help="Enable debug logging.")]
ModelOpt = Annotated[
    list[ModelName] | None, typer.Option("--model", help="Reference model; repeatable.")
]
SizesOpt = Annotated[list[int] | None, typer.Option("--n", help="Sample size; repeatable.")]
KsOpt = Annotated[list[int] | None, typer.Option("--k", help="Exceedance count; repeatable.")]
ArOpt = Annotated[int | None, typer.Option("--p", help="AR order.")]
MaOpt = Annotated[int | None, typer.Option("--q", help="MA order.")]
ExogOpt = Annotated[
    Path | None, typer.Option("--exog", help="CSV with exogenous regressors.")
]


# --- Flag parsing ---


def parse_gamma_prior(text: str) -> dict[str, Any]:
    """'normal:0,0.4' | 'flat' | 'flat:5' | 'fixed:0.2' -> [prior] fields."""
    kind, _, args = text.partition(":")
    values = _floats(text, args)
    match kind, len(values):
        case "normal", 2:
            return {"gamma": "normal", "gamma_mean": values[0], "gamma_sd": values[1]}
        case "flat", 0:
            return {"gamma": "flat"}
        case "flat", 1:
            return {"gamma": "flat", "gamma_max": values[0]}
        case "fixed", 1:
            return {"gamma": "fixed", "gamma_value": values[0]}
    raise typer.BadParameter(f"unrecognized gamma prior {text!r}", param_hint="--prior-gamma")


def parse_sigma_prior(text: str) -> dict[str, Any]:
    """'lognormal:1.0' | 'vague:10' | 'flat' -> [prior] fields."""
    kind, _, args = text.partition(":")
    values = _floats(text, args)
    match kind, len(values):
        case "lognormal", 0:
            return {"sigma": "lognormal"}
        case "lognormal", 1:
            return {"sigma": "lognormal", "sigma_sd": values[0]}
        case "vague", 0:
            return {"sigma": "vague"}
        case "vague", 1:
            return {"sigma": "vague", "sigma_c": values[0]}
        case "flat", 0:
            return {"sigma": "flat"}
    raise typer.BadParameter(f"unrecognized sigma prior {text!r}", param_hint="--prior-sigma")


def _floats(text: str, args: str) -> list[float]:
    if not args:
        return []
    try:
        return [float(v) for v in args.split(",")]
    except ValueError as e:
        raise typer.BadParameter(f"non-numeric prior arguments in {text!r}") from e


def _set(flags: dict[str, Any], section: str, key: str, value: Any) -> None:
    if value is not None:
        flags.setdefault(section, {})[key] = value


def _merge(*parts: dict[str, Any]) -> dict[str, Any]:
    merged: dict[str, Any] = {}
    for part in parts:
        merged = deep_merge(merged, part)
    return merged


def common_flags(
    *,
    input: Path | None = None,
    column: str | None = None,
    k: int | None = None,
    tau_e: list[float] | None = None,
    m: int | None = None,
    block: BlockMode | None = None,
    prior_gamma: str | None = None,
    prior_sigma: str | None = None,
    chains: int | None = None,
    iters: int | None = None,
    seed: int | None = None,
    variance_method: VarianceMethod | None = None,
    out: Path | None = None,
    draws: Path | None = None,
    plot_data: Path | None = None,
    deterministic: bool = False,
) -> dict[str, Any]:
    """Nested config overrides for every flag that was given."""
    flags: dict[str, Any] = {}
    if seed is not None:
        flags["seed"] = seed
    _set(flags, "data", "input", input)
    _set(flags, "data", "column", column)
    _set(flags, "tail", "k", k)
    _set(flags, "tail", "tau_e", tau_e or None)
    _set(flags, "blocks", "m", m)
    _set(flags, "blocks", "mode", block)
    if prior_gamma is not None:
        flags.setdefault("prior", {}).update(parse_gamma_prior(prior_gamma))
    if prior_sigma is not None:
        flags.setdefault("prior", {}).update(parse_sigma_prior(prior_sigma))
    _set(flags, "mcmc", "chains", chains)
    _set(flags, "mcmc", "iterations", iters)
    _set(flags, "inference", "variance_method", variance_method)
    _set(flags, "output", "out", out)
    _set(flags, "output", "draws_csv", draws)
    _set(flags, "output", "plot_data", plot_data)
    if deterministic:
        _set(flags, "output", "deterministic", True)
    return flags


# --- Execution ---


def _load_config(config: Path | None, flags: dict[str, Any]) -> AnalysisConfig:
    from pydantic import ValidationError

    try:
        return AnalysisConfig.load_with_override(base=config, flags=flags)
    except ValidationError as e:
        typer.echo("✗ Config validation failed", err=True)
        for error in e.errors():
            loc = " -> ".join(str(item) for item in error["loc"])
            typer.echo(f"  [{loc}] {error['msg']}", err=True)
        raise typer.Exit(code=2) from e
    except tomllib.TOMLDecodeError as e:
        typer.echo(f"✗ Config file is not valid TOML: {e}", err=True)
        raise typer.Exit(code=2) from e


def _finish(report: Report, out: Path | None) -> None:
    if out is None:
        typer.echo(report.to_json(), nl=False)
    else:
        report.write(out)
        typer.echo(f"✓ Report written to {out}", err=True)
    if report.error is not None:
        error = report.error
        typer.echo(f"✗ {error.type} [{error.code}]: {error.message}", err=True)
        raise typer.Exit(code=report.exit_code)


def _execute(config: Path | None, flags: dict[str, Any], debug: bool) -> None:
    from potdep.runner import run

    _setup_logging(debug)
    cfg = _load_config(config, flags)
    _finish(run(cfg), cfg.output.out)


# --- Marginal analysis ---


def _marginal_command(name: str, stage: Stage, doc: str) -> None:
    def command(
        config: ConfigOpt = None,
        input: InputOpt = None,
        column: ColumnOpt = None,
        k: KOpt = None,
        tau_e: TauEOpt = None,
        m: MOpt = None,
        block: BlockOpt = None,
        prior_gamma: PriorGammaOpt = None,
        prior_sigma: PriorSigmaOpt = None,
        chains: ChainsOpt = None,
        iters: ItersOpt = None,
        seed: SeedOpt = None,
        variance_method: VarianceOpt = None,
        out: OutOpt = None,
        draws: DrawsOpt = None,
        emit_plot_data: PlotDataOpt = None,
        deterministic: DeterministicOpt = False,
        debug: DebugOpt = False,
    ) -> None:
        flags = common_flags(
            input=input,
            column=column,
            k=k,
            tau_e=tau_e,
            m=m,
            block=block,
            prior_gamma=prior_gamma,
            prior_sigma=prior_sigma,
            chains=chains,
            iters=iters,
            seed=seed,
            variance_method=variance_method,
            out=out,
            draws=draws,
            plot_data=emit_plot_data,
            deterministic=deterministic,
        )
        flags["mode"] = Mode.MARGINAL
        _set(flags, "inference", "stage", stage)
        _execute(config, flags, debug)

    command.__doc__ = doc
    app.command(name=name)(command)


_marginal_command("fit", Stage.FIT, "Fit the GP distribution to the top k exceedances.")
_marginal_command("covmat", Stage.COVARIANCE, "Fit and estimate the dependence covariance.")
_marginal_command("posterior", Stage.POSTERIOR, "Sample the naive and adjusted posteriors.")
_marginal_command("quantile", Stage.QUANTILE, "Full analysis including extreme quantiles.")


# --- Dynamic analysis ---


def _dynamic_flags(
    p: int | None,
    q: int | None,
    exog: Path | None,
    exog_column: list[str] | None,
    warmup: int | None,
) -> dict[str, Any]:
    flags: dict[str, Any] = {"mode": Mode.DYNAMIC}
    _set(flags, "dynamic", "p", p)
    _set(flags, "dynamic", "q", q)
    _set(flags, "dynamic", "warmup", warmup)
    _set(flags, "data", "exog_input", exog)
    _set(flags, "data", "exog_columns", exog_column or None)
    return flags


@app.command()
def dynamic(
    config: ConfigOpt = None,
    input: InputOpt = None,
    column: ColumnOpt = None,
    k: KOpt = None,
    tau_e: TauEOpt = None,
    m: MOpt = None,
    p: ArOpt = None,
    q: MaOpt = None,
    exog: ExogOpt = None,
    exog_column: Annotated[
        list[str] | None, typer.Option("--exog-column", help="Regressor column; repeatable.")
    ] = None,
    warmup: Annotated[int | None, typer.Option("--warmup", help="Discarded warm-up.")] = None,
    window: Annotated[
        int | None, typer.Option("--window", help="Rolling-window length.")
    ] = None,
    step: Annotated[int | None, typer.Option("--step", help="Rolling-window step.")] = None,
    prior_gamma: PriorGammaOpt = None,
    prior_sigma: PriorSigmaOpt = None,
    chains: ChainsOpt = None,
    iters: ItersOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    draws: DrawsOpt = None,
    emit_plot_data: PlotDataOpt = None,
    deterministic: DeterministicOpt = False,
    debug: DebugOpt = False,
) -> None:
    """Conditional tail quantile of the next observation given the past."""
    flags = common_flags(
        input=input,
        column=column,
        k=k,
        tau_e=tau_e,
        m=m,
        prior_gamma=prior_gamma,
        prior_sigma=prior_sigma,
        chains=chains,
        iters=iters,
        seed=seed,
        out=out,
        draws=draws,
        plot_data=emit_plot_data,
        deterministic=deterministic,
    )
    flags = _merge(flags, _dynamic_flags(p, q, exog, exog_column, warmup))
    _set(flags, "dynamic", "window", window)
    _set(flags, "dynamic", "step", step)
    _execute(config, flags, debug)


@app.command()
def forecast(
    config: ConfigOpt = None,
    input: InputOpt = None,
    column: ColumnOpt = None,
    horizons: Annotated[
        int, typer.Option("--horizons", "-H", help="Forecast horizons 1..H.")
    ] = 1,
    k: KOpt = None,
    tau_e: TauEOpt = None,
    m: MOpt = None,
    p: ArOpt = None,
    q: MaOpt = None,
    exog: ExogOpt = None,
    warmup: Annotated[int | None, typer.Option("--warmup", help="Discarded warm-up.")] = None,
    chains: ChainsOpt = None,
    iters: ItersOpt = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    deterministic: DeterministicOpt = False,
    debug: DebugOpt = False,
) -> None:
    """h-step conditional tail quantiles for horizons 1..H."""
    flags = common_flags(
        input=input,
        column=column,
        k=k,
        tau_e=tau_e,
        m=m,
        chains=chains,
        iters=iters,
        seed=seed,
        out=out,
        deterministic=deterministic,
    )
    flags = _merge(flags, _dynamic_flags(p, q, exog, None, warmup))
    _set(flags, "dynamic", "horizons", horizons)
    _execute(config, flags, debug)


# --- Simulation lab ---


def _sim_flags(
    models: list[ModelName] | None,
    sizes: list[int] | None = None,
    ks: list[int] | None = None,
    replications: int | None = None,
) -> dict[str, Any]:
    flags: dict[str, Any] = {}
    _set(flags, "sim", "models", models or None)
    _set(flags, "sim", "sizes", sizes or None)
    _set(flags, "sim", "ks", ks or None)
    _set(flags, "sim", "replications", replications)
    return flags


@app.command()
def simulate(
    config: ConfigOpt = None,
    model: ModelOpt = None,
    length: Annotated[int | None, typer.Option("--length", help="Series length.")] = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    emit_plot_data: PlotDataOpt = None,
    deterministic: DeterministicOpt = False,
    debug: DebugOpt = False,
) -> None:
    """Generate series from the reference models."""
    flags = _merge(
        common_flags(seed=seed, out=out, plot_data=emit_plot_data, deterministic=deterministic),
        _sim_flags(model),
        {"mode": Mode.SIMULATE},
    )
    _set(flags, "sim", "length", length)
    _execute(config, flags, debug)


@app.command()
def coverage(
    config: ConfigOpt = None,
    model: ModelOpt = None,
    n: SizesOpt = None,
    k: KsOpt = None,
    replications: Annotated[
        int | None, typer.Option("--replications", "-N", help="Replications per cell.")
    ] = None,
    full_grid: Annotated[
        bool, typer.Option("--full-grid", help="Complete n x k grid, 5000 replications.")
    ] = False,
    workers: Annotated[int | None, typer.Option("--workers", help="Worker processes.")] = None,
    m: MOpt = None,
    block: BlockOpt = None,
    prior_gamma: PriorGammaOpt = None,
    prior_sigma: PriorSigmaOpt = None,
    chains: ChainsOpt = None,
    iters: ItersOpt = None,
    seed: SeedOpt = None,
    variance_method: VarianceOpt = None,
    out: OutOpt = None,
    emit_plot_data: PlotDataOpt = None,
    deterministic: DeterministicOpt = False,
    debug: DebugOpt = False,
) -> None:
    """Empirical coverage of the credible and confidence regions."""
    flags = _merge(
        common_flags(
            block=block,
            prior_gamma=prior_gamma,
            prior_sigma=prior_sigma,
            chains=chains,
            iters=iters,
            seed=seed,
            variance_method=variance_method,
            out=out,
            plot_data=emit_plot_data,
            deterministic=deterministic,
        ),
        _sim_flags(model, n, k, replications),
        {"mode": Mode.COVERAGE},
    )
    _set(flags, "sim", "m", m)
    _set(flags, "sim", "workers", workers)
    if full_grid:
        _set(flags, "sim", "full_grid", True)
    _execute(config, flags, debug)


@app.command("sigma-exp")
def sigma_exp(
    config: ConfigOpt = None,
    model: ModelOpt = None,
    n: SizesOpt = None,
    k: KsOpt = None,
    m: Annotated[list[int] | None, typer.Option("--m", help="Block length; repeatable.")] = None,
    block: Annotated[
        list[BlockMode] | None, typer.Option("--block", help="Block scheme; repeatable.")
    ] = None,
    replications: Annotated[
        int | None, typer.Option("--replications", "-N", help="Replications per cell.")
    ] = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    emit_plot_data: PlotDataOpt = None,
    deterministic: DeterministicOpt = False,
    debug: DebugOpt = False,
) -> None:
    """Distribution of the Sigma_hat components across block lengths."""
    flags = _merge(
        common_flags(seed=seed, out=out, plot_data=emit_plot_data, deterministic=deterministic),
        _sim_flags(model, n, k, replications),
        {"mode": Mode.SIGMA_EXPERIMENT},
    )
    _set(flags, "sim", "m_list", m or None)
    _set(flags, "sim", "modes", block or None)
    _execute(config, flags, debug)


@app.command()
def truths(
    config: ConfigOpt = None,
    model: ModelOpt = None,
    n: SizesOpt = None,
    k: KsOpt = None,
    oracle_size: Annotated[
        int | None, typer.Option("--oracle-size", help="Points in the oracle sample.")
    ] = None,
    seed: SeedOpt = None,
    out: OutOpt = None,
    debug: DebugOpt = False,
) -> None:
    """Regenerate the cached oracle constants of the reference models."""
    from potdep.runner import regenerate_truths

    _setup_logging(debug)
    flags = _merge(common_flags(seed=seed, out=out), _sim_flags(model, n, k))
    _set(flags, "sim", "oracle_size", oracle_size)
    cfg = _load_config(config, flags)
    _finish(regenerate_truths(cfg), cfg.output.out)


# --- Config subcommands ---


@config_app.command("show")
def config_show(config: ConfigOpt = None) -> None:
    """Show effective configuration as TOML."""
    try:
        import tomli_w  # type: ignore[import-untyped]

        has_tomli_w = True
    except ImportError:
        has_tomli_w = False

    cfg = _load_config(config, {})
    data = cfg.model_dump(mode="json", exclude_none=True)

    if has_tomli_w:
        typer.echo(tomli_w.dumps(data))
    else:
        # Fallback: pretty JSON
        typer.echo(json.dumps(data, indent=2))


@config_app.command("validate")
def config_validate(config: ConfigOpt = None) -> None:
    """Validate configuration file and report errors."""
    from pydantic import ValidationError

    from potdep.paths import default_config_path

    path = config or default_config_path()
    if not path.exists():
        typer.echo(f"Config file not found: {path}")
        typer.echo("Using defaults; nothing to validate.")
        return

    try:
        cfg = AnalysisConfig.load(path)
        typer.echo(f"✓ Config valid: {path}")
        typer.echo(f"  mode = {cfg.mode}")
        typer.echo(f"  seed = {cfg.seed}")
    except ValidationError as e:
        typer.echo(f"✗ Config validation failed: {path}", err=True)
        for error in e.errors():
            loc = " -> ".join(str(item) for item in error["loc"])
            typer.echo(f"  [{loc}] {error['msg']}", err=True)
        raise typer.Exit(code=1) from e


# --- Helpers ---


def _setup_logging(debug: bool) -> None:
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )
