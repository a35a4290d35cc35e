"""Covariance-estimator and coverage experiments over the reference models."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import ChainSettings
from potdep.covariance import estimate_tail_copula, r_integral, sigma_matrix
from potdep.dynamic.residuals import make_residuals
from potdep.errors import InvalidArgumentError, PotError
from potdep.frequentist import Interval
from potdep.likelihood import ExceedanceSet, mle_fit
from potdep.names import BlockMode, Estimator, ModelName, Stage, Target, VarianceMethod
from potdep.pipeline import MarginalAnalysis, MarginalSettings, analyze_marginal
from potdep.rng import derive_seed
from potdep.sim.models import MIN_BURN_IN, ModelSpec, model_info, simulate
from potdep.sim.truths import TrueValues, true_values

logger = logging.getLogger(__name__)

SIGMA_MODELS = (
    ModelName.AR1_T1,
    ModelName.ARMA11_T2,
    ModelName.ARCH1,
    ModelName.IID_EXPONENTIAL,
    ModelName.IID_FRECHET,
)
COMPONENTS = (("s11", 0, 0), ("s12", 0, 1), ("s22", 1, 1))
FAILURE_LIMIT = 0.05
"""A coverage cell is invalid when more than this share of replications fail."""

CELLS: tuple[tuple[Estimator, Target], ...] = (
    (Estimator.BCI, Target.GAMMA),
    (Estimator.BACI, Target.GAMMA),
    (Estimator.FCI, Target.GAMMA),
    (Estimator.BCI, Target.SCALE),
    (Estimator.BACI, Target.SCALE),
    (Estimator.FCI, Target.SCALE),
    (Estimator.BCR, Target.THETA),
    (Estimator.BACR, Target.THETA),
    (Estimator.FCR, Target.THETA),
    (Estimator.BCI, Target.QUANTILE),
    (Estimator.BACI, Target.QUANTILE),
    (Estimator.FCI, Target.QUANTILE),
)

FULL_GRID_SIZES = (1000, 2000, 4000)
FULL_GRID_FRACTIONS = (40, 20, 10)
FULL_GRID_REPLICATIONS = 5000


def full_grid() -> list[tuple[int, int]]:
    """(n, k) pairs of the complete study: k in {n/40, n/20, n/10}."""
    return [(n, n // d) for n in FULL_GRID_SIZES for d in FULL_GRID_FRACTIONS]


def _model_index(name: ModelName) -> int:
    return list(ModelName).index(ModelName(name))


def _series_length(name: ModelName, n: int) -> int:
    return n + math.ceil(math.sqrt(n)) if model_info(name).dynamic else n


# --- Covariance experiment ---


def _sigma_for(
    x: NDArray[np.float64], gamma: float, k: int, m: int, mode: BlockMode
) -> NDArray[np.float64]:
    table = estimate_tail_copula(x, k, m, mode)
    return sigma_matrix(gamma, table.r11, r_integral(table), repair=True)


def sigma_experiment(
    model: ModelName,
    n: int,
    k: int,
    m_list: Sequence[int],
    replications: int,
    modes: Sequence[BlockMode] = (BlockMode.SLIDING, BlockMode.DISJOINT),
    seed: int = 0,
    burn_in: int = MIN_BURN_IN,
    truth_n: int = 100_000,
    truth_reps: int = 20,
) -> pd.DataFrame:
    """Mean and 5%/95% quantiles of the Sigma_hat components per block length and mode.

    Each replication reuses one simulated series for every (m, mode). The
    reference column averages Sigma at gamma0 over truth_reps long series
    (k and m scaled with the length); `independence` is the R = min form.
    """
    model = ModelName(model)
    if model not in SIGMA_MODELS:
        supported = ", ".join(str(m) for m in SIGMA_MODELS)
        raise InvalidArgumentError(f"sigma experiment supports {supported}, got {model}")
    idx = _model_index(model)
    gamma0 = model_info(model).gamma0

    estimates: dict[tuple[BlockMode, int], list[NDArray[np.float64]]] = {
        (mode, m): [] for mode in modes for m in m_list
    }
    errors: dict[tuple[BlockMode, int], str] = {}
    for rep in range(replications):
        spec = ModelSpec(model, n, derive_seed(seed, idx, n, k, rep), burn_in)
        x = simulate(spec).values
        try:
            gamma = mle_fit(ExceedanceSet.from_sample(x, k)).params.gamma
        except PotError as exc:
            logger.debug("replication %d: fit failed: %s", rep, exc)
            continue
        for mode in modes:
            for m in m_list:
                try:
                    estimates[(mode, m)].append(_sigma_for(x, gamma, k, m, mode))
                except PotError as exc:
                    errors[(mode, m)] = f"{exc.code}: {exc}"

    reference = _sigma_reference(model, n, k, seed, burn_in, truth_n, truth_reps)
    independence = sigma_matrix(gamma0, 1.0, 1.0) if gamma0 > -0.5 else np.full((2, 2), np.nan)

    rows: list[dict[str, Any]] = []
    for (mode, m), mats in estimates.items():
        stack = np.array(mats) if mats else np.full((0, 2, 2), np.nan)
        for comp, i, j in COMPONENTS:
            values = stack[:, i, j]
            rows.append(
                {
                    "model": str(model),
                    "n": n,
                    "k": k,
                    "mode": str(mode),
                    "m": m,
                    "component": comp,
                    "mean": float(values.mean()) if values.size else math.nan,
                    "q05": float(np.quantile(values, 0.05)) if values.size else math.nan,
                    "q95": float(np.quantile(values, 0.95)) if values.size else math.nan,
                    "reference": float(reference[i, j]),
                    "independence": float(independence[i, j]),
                    "replications": replications,
                    "failures": replications - len(mats),
                    "error": errors.get((mode, m), ""),
                }
            )
    return pd.DataFrame(rows)


def _sigma_reference(
    model: ModelName,
    n: int,
    k: int,
    seed: int,
    burn_in: int,
    truth_n: int,
    truth_reps: int,
) -> NDArray[np.float64]:
    gamma0 = model_info(model).gamma0
    if truth_reps < 1 or gamma0 <= -0.5:
        return np.full((2, 2), np.nan)
    k_ref = max(1, round(truth_n * k / n))
    m_ref = max(1, min(truth_n // 4, 50 * truth_n // n))
    idx = _model_index(model)
    r11: list[float] = []
    r_int: list[float] = []
    for rep in range(truth_reps):
        spec = ModelSpec(model, truth_n, derive_seed(seed, idx, truth_n, k_ref, rep, 1), burn_in)
        table = estimate_tail_copula(simulate(spec).values, k_ref, m_ref)
        r11.append(table.r11)
        r_int.append(r_integral(table))
    return sigma_matrix(gamma0, float(np.mean(r11)), float(np.mean(r_int)), repair=True)


# --- Coverage experiment ---


@dataclass(frozen=True)
class CoverageSettings:
    alpha: float = 0.05
    m: int = 50
    mode: BlockMode = BlockMode.SLIDING
    variance_method: VarianceMethod = VarianceMethod.DELTA
    mc_draws: int = 20_000
    burn_in: int = MIN_BURN_IN
    oracle_size: int = 10_000_000
    seed: int = 0
    prior: PriorSpec = field(default_factory=PriorSpec)
    mcmc: ChainSettings = field(default_factory=ChainSettings)


@dataclass(frozen=True)
class CoverageCell:
    model: ModelName
    n: int
    k: int
    estimator: Estimator
    target: Target
    hits: int
    replications: int
    failures: int

    @property
    def coverage(self) -> float:
        used = self.replications - self.failures
        return self.hits / used if used > 0 else math.nan

    @property
    def valid(self) -> bool:
        return self.failures <= FAILURE_LIMIT * self.replications

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": str(self.model),
            "n": self.n,
            "k": self.k,
            "estimator": str(self.estimator),
            "target": str(self.target),
            "hits": self.hits,
            "replications": self.replications,
            "failures": self.failures,
            "coverage": self.coverage,
            "valid": self.valid,
        }


@dataclass(frozen=True)
class CoverageReport:
    cells: tuple[CoverageCell, ...] = ()
    alpha: float = 0.05
    failure_messages: dict[str, int] = field(default_factory=dict)

    def cell(
        self, model: ModelName, n: int, k: int, estimator: Estimator, target: Target
    ) -> CoverageCell:
        for c in self.cells:
            if (c.model, c.n, c.k, c.estimator, c.target) == (model, n, k, estimator, target):
                return c
        raise KeyError((model, n, k, estimator, target))

    def to_frame(self) -> pd.DataFrame:
        columns = [
            "model",
            "n",
            "k",
            "estimator",
            "target",
            "hits",
            "replications",
            "failures",
            "coverage",
            "valid",
        ]
        return pd.DataFrame([c.to_dict() for c in self.cells], columns=columns)

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "cells": [c.to_dict() for c in self.cells],
            "failure_messages": dict(self.failure_messages),
        }


@dataclass(frozen=True)
class ReplicationTask:
    model: ModelName
    n: int
    k: int
    rep: int
    truth: TrueValues
    settings: CoverageSettings


@dataclass(frozen=True)
class ReplicationOutcome:
    hits: dict[tuple[Estimator, Target], bool] = field(default_factory=dict)
    error: str | None = None


def _shifted(interval: Interval, shift: float) -> Interval:
    return Interval(interval.lower + shift, interval.upper + shift)


def score_analysis(
    analysis: MarginalAnalysis, truth: TrueValues, quantile_truth: float, shift: float = 0.0
) -> dict[tuple[Estimator, Target], bool]:
    """Containment of the true values in all six region and interval types."""
    freq, adj, naive = analysis.frequentist, analysis.adjusted, analysis.naive
    if freq is None or adj is None or naive is None or not analysis.quantiles:
        raise InvalidArgumentError("analysis did not reach the quantile stage")
    q = analysis.quantiles[0]
    if q.adjusted is None or q.naive is None:
        raise InvalidArgumentError("analysis carries no quantile posteriors")
    theta0 = np.array([truth.gamma0, truth.a0])
    return {
        (Estimator.BCI, Target.GAMMA): naive.gamma.contains(truth.gamma0),
        (Estimator.BACI, Target.GAMMA): adj.gamma.contains(truth.gamma0),
        (Estimator.FCI, Target.GAMMA): freq.gamma.contains(truth.gamma0),
        (Estimator.BCI, Target.SCALE): naive.sigma.contains(truth.a0),
        (Estimator.BACI, Target.SCALE): adj.sigma.contains(truth.a0),
        (Estimator.FCI, Target.SCALE): freq.sigma.contains(truth.a0),
        (Estimator.BCR, Target.THETA): naive.ellipsoid.contains(theta0),
        (Estimator.BACR, Target.THETA): adj.ellipsoid.contains(theta0),
        (Estimator.FCR, Target.THETA): freq.ellipsoid.contains(theta0),
        (Estimator.BCI, Target.QUANTILE): _shifted(q.naive.interval, shift).contains(
            quantile_truth
        ),
        (Estimator.BACI, Target.QUANTILE): _shifted(q.adjusted.interval, shift).contains(
            quantile_truth
        ),
        (Estimator.FCI, Target.QUANTILE): _shifted(q.frequentist.interval, shift).contains(
            quantile_truth
        ),
    }


def run_replication(task: ReplicationTask) -> ReplicationOutcome:
    """Simulate, analyze and score one replication; module errors become outcomes."""
    s = task.settings
    info = model_info(task.model)
    seed = derive_seed(s.seed, _model_index(task.model), task.n, task.k, task.rep)
    n_series = _series_length(task.model, task.n)
    settings = MarginalSettings(
        k=task.k,
        tau_e=(1.0 - 1.0 / task.n,),
        m=s.m,
        mode=s.mode,
        alpha=s.alpha,
        variance_method=s.variance_method,
        mc_draws=s.mc_draws,
        stage=Stage.QUANTILE,
    )
    try:
        sim = simulate(ModelSpec(task.model, n_series, seed, s.burn_in))
        if info.dynamic and info.arma is not None:
            res = make_residuals(sim.values, info.arma, s_n=n_series - task.n)
            analysis = analyze_marginal(res.residuals, settings, s.prior, s.mcmc, seed)
            shift = res.one_step_pred
            quantile_truth = float(sim.next_mean or 0.0) + task.truth.q0
        else:
            analysis = analyze_marginal(sim.values, settings, s.prior, s.mcmc, seed)
            shift = 0.0
            quantile_truth = task.truth.q0
        return ReplicationOutcome(
            hits=score_analysis(analysis, task.truth, quantile_truth, shift)
        )
    except PotError as exc:
        return ReplicationOutcome(error=f"{exc.code}: {type(exc).__name__}")


def _tasks(
    cells: Iterable[tuple[ModelName, int, int]],
    replications: int,
    truths: dict[tuple[ModelName, int, int], TrueValues],
    settings: CoverageSettings,
) -> Iterator[ReplicationTask]:
    for model, n, k in cells:
        for rep in range(replications):
            yield ReplicationTask(model, n, k, rep, truths[(model, n, k)], settings)


def coverage_experiment(
    models: Sequence[ModelName],
    grid: Sequence[tuple[int, int]],
    replications: int,
    settings: CoverageSettings | None = None,
    workers: int = 1,
    truths: dict[tuple[ModelName, int, int], TrueValues] | None = None,
) -> CoverageReport:
    """Empirical coverage of all six region/interval types per (model, n, k).

    Replication r of a cell draws from the stream (seed, model, n, k, r), so the
    report does not depend on the worker count.
    """
    settings = settings or CoverageSettings()
    if replications == 0:
        return CoverageReport(alpha=settings.alpha)
    if replications < 0:
        raise InvalidArgumentError("replications must be non-negative")
    cells = [(ModelName(model), n, k) for model in models for n, k in grid]
    if not cells:
        raise InvalidArgumentError("coverage experiment needs at least one cell")

    known = dict(truths or {})
    for cell in cells:
        if cell not in known:
            model, n, k = cell
            known[cell] = true_values(model, n, k, settings.oracle_size, settings.seed)

    tasks = _tasks(cells, replications, known, settings)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_replication, tasks, chunksize=8))
    else:
        outcomes = [run_replication(t) for t in tasks]

    out: list[CoverageCell] = []
    messages: dict[str, int] = {}
    for i, (model, n, k) in enumerate(cells):
        chunk = outcomes[i * replications : (i + 1) * replications]
        failed = [o for o in chunk if o.error is not None]
        for o in failed:
            messages[o.error or ""] = messages.get(o.error or "", 0) + 1
        for estimator, target in CELLS:
            hits = sum(1 for o in chunk if o.error is None and o.hits[(estimator, target)])
            out.append(
                CoverageCell(model, n, k, estimator, target, hits, replications, len(failed))
            )
        if len(failed) > FAILURE_LIMIT * replications:
            logger.warning(
                "Cell %s n=%d k=%d: %d of %d replications failed; flagged invalid",
                model,
                n,
                k,
                len(failed),
                replications,
            )
        logger.info("Coverage cell %s n=%d k=%d done", model, n, k)
    return CoverageReport(cells=tuple(out), alpha=settings.alpha, failure_messages=messages)
