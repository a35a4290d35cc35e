"""Marginal analysis: fit, covariance, frequentist regions, posteriors and quantiles.

Shared by the CLI runner, the dynamic pipeline (on residuals) and the
coverage experiment.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from potdep.bayes.posterior import (
    PosteriorDraws,
    QuantilePosterior,
    credible_summaries,
    quantile_posterior,
    sample_posterior,
)
from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import ChainSettings
from potdep.config import AnalysisConfig
from potdep.covariance import SerialCovariance, assemble, chebyshev_grid
from potdep.frequentist import (
    EllipsoidRegion,
    Interval,
    QuantileInterval,
    QuantileTarget,
    confidence_ellipsoid,
    param_intervals,
    quantile_interval,
)
from potdep.likelihood import ExceedanceSet, MleFit, OptimizerSettings, mle_fit
from potdep.names import BlockMode, Stage, VarianceMethod
from potdep.rng import derive_seed

logger = logging.getLogger(__name__)

_ADJUSTED_STREAM = 1
_NAIVE_STREAM = 2
_VARIANCE_STREAM = 3


@dataclass(frozen=True)
class MarginalSettings:
    k: int
    tau_e: tuple[float, ...] = ()
    m: int = 50
    mode: BlockMode = BlockMode.SLIDING
    gap: int | None = None
    grid_size: int = 64
    c_bound: float = 10.0
    spd_repair: bool = True
    alpha: float = 0.05
    variance_method: VarianceMethod = VarianceMethod.DELTA
    mc_draws: int = 20_000
    min_k: int = 5
    stage: Stage = Stage.QUANTILE
    naive: bool = True
    """Also sample the unadjusted posterior."""

    @classmethod
    def from_config(cls, cfg: AnalysisConfig, k: int) -> MarginalSettings:
        return cls(
            k=k,
            tau_e=tuple(cfg.tail.tau_e),
            m=cfg.blocks.m,
            mode=cfg.blocks.mode,
            gap=cfg.blocks.gap,
            grid_size=cfg.blocks.grid_size,
            c_bound=cfg.blocks.c_bound,
            spd_repair=cfg.blocks.spd_repair,
            alpha=cfg.inference.alpha,
            variance_method=cfg.inference.variance_method,
            mc_draws=cfg.inference.mc_draws,
            min_k=cfg.tail.min_k,
            stage=cfg.inference.stage,
        )

    def reaches(self, stage: Stage) -> bool:
        order = list(Stage)
        return order.index(self.stage) >= order.index(stage)


@dataclass(frozen=True)
class RegionSummary:
    ellipsoid: EllipsoidRegion
    gamma: Interval
    sigma: Interval

    def to_dict(self) -> dict[str, Any]:
        return {
            "ellipsoid": self.ellipsoid.to_dict(),
            "gamma": self.gamma.to_dict(),
            "sigma": self.sigma.to_dict(),
        }


@dataclass(frozen=True)
class QuantileSummary:
    """Frequentist interval (FCI) and naive (BCI) / adjusted (BACI) posteriors at one level."""

    target: QuantileTarget
    frequentist: QuantileInterval
    adjusted: QuantilePosterior | None = None
    naive: QuantilePosterior | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau_e": self.target.tau_e,
            "p": self.target.p,
            "frequentist": self.frequentist.to_dict(),
            "adjusted": self.adjusted.to_dict() if self.adjusted else None,
            "naive": self.naive.to_dict() if self.naive else None,
        }


@dataclass(frozen=True)
class MarginalAnalysis:
    exceedances: ExceedanceSet
    fit: MleFit
    covariance: SerialCovariance | None = None
    frequentist: RegionSummary | None = None
    adjusted_draws: PosteriorDraws | None = None
    naive_draws: PosteriorDraws | None = None
    adjusted: RegionSummary | None = None
    naive: RegionSummary | None = None
    quantiles: tuple[QuantileSummary, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        exc, fit, cov = self.exceedances, self.fit, self.covariance
        out: dict[str, Any] = {
            "n": exc.n,
            "k": exc.k,
            "threshold": exc.threshold,
            "fit": {
                "gamma": fit.params.gamma,
                "sigma": fit.params.sigma,
                "loglik": fit.loglik,
                "converged": fit.converged,
                "iterations": fit.iterations,
            },
        }
        if cov is not None:
            out["covariance"] = {
                "sigma_hat": cov.sigma_hat.tolist(),
                "omega_hat": cov.omega_hat.tolist(),
                "c_hat": cov.c_hat.tolist(),
                "d_hat": cov.d_hat.tolist(),
                "r11": cov.r11,
                "r_int": cov.r_int,
            }
        regions = {
            "FCR": self.frequentist,
            "BACR": self.adjusted,
            "BCR": self.naive,
        }
        out["regions"] = {key: r.to_dict() for key, r in regions.items() if r is not None}
        posteriors = {"adjusted": self.adjusted_draws, "naive": self.naive_draws}
        out["posterior"] = {
            key: d.diagnostics() for key, d in posteriors.items() if d is not None
        }
        out["quantiles"] = [q.to_dict() for q in self.quantiles]
        return out


def quantile_targets(tau_e: Sequence[float], n: int, k: int) -> list[QuantileTarget]:
    """Targets for the requested levels; an empty list means 1 - 1/n."""
    levels = list(tau_e) or [1.0 - 1.0 / n]
    return [QuantileTarget.from_levels(t, n, k) for t in levels]


def analyze_marginal(
    data: ArrayLike,
    settings: MarginalSettings,
    prior: PriorSpec,
    mcmc: ChainSettings,
    seed: int = 0,
) -> MarginalAnalysis:
    """Run the marginal stack up to settings.stage."""
    x = np.asarray(data, dtype=float)
    exc = ExceedanceSet.from_sample(x, settings.k)
    fit = mle_fit(exc, OptimizerSettings(min_k=settings.min_k))
    logger.info(
        "GP fit: gamma=%.4f sigma=%.4g (n=%d, k=%d)",
        fit.params.gamma,
        fit.params.sigma,
        exc.n,
        exc.k,
    )
    if not settings.reaches(Stage.COVARIANCE):
        return MarginalAnalysis(exceedances=exc, fit=fit)

    cov = assemble(
        x,
        exc.k,
        settings.m,
        settings.mode,
        fit,
        gap=settings.gap,
        grid=chebyshev_grid(settings.grid_size),
        c_bound=settings.c_bound,
        spd_repair=settings.spd_repair,
    )
    ellipsoid = confidence_ellipsoid(fit, cov, settings.alpha)
    freq = RegionSummary(ellipsoid, *param_intervals(fit, cov, settings.alpha))
    targets = quantile_targets(settings.tau_e, exc.n, exc.k)
    variance_seed = derive_seed(seed, _VARIANCE_STREAM)
    fci = [
        quantile_interval(
            fit,
            cov,
            exc,
            t,
            settings.alpha,
            settings.variance_method,
            settings.mc_draws,
            variance_seed,
        )
        for t in targets
    ]
    if not settings.reaches(Stage.POSTERIOR):
        return MarginalAnalysis(
            exceedances=exc,
            fit=fit,
            covariance=cov,
            frequentist=freq,
            quantiles=tuple(QuantileSummary(t, f) for t, f in zip(targets, fci, strict=True)),
        )

    adjusted_draws = sample_posterior(
        exc, fit, cov, prior, replace(mcmc, seed=derive_seed(seed, _ADJUSTED_STREAM)), True
    )
    naive_draws = (
        sample_posterior(
            exc, fit, cov, prior, replace(mcmc, seed=derive_seed(seed, _NAIVE_STREAM)), False
        )
        if settings.naive
        else None
    )
    adjusted = RegionSummary(*credible_summaries(adjusted_draws, settings.alpha))
    naive = (
        RegionSummary(*credible_summaries(naive_draws, settings.alpha))
        if naive_draws is not None
        else None
    )

    summaries: list[QuantileSummary] = []
    for target, freq_q in zip(targets, fci, strict=True):
        baci = bci = None
        if settings.reaches(Stage.QUANTILE):
            baci = quantile_posterior(
                adjusted_draws,
                fit,
                exc,
                cov,
                target,
                settings.variance_method,
                settings.alpha,
                mc_draws=settings.mc_draws,
                seed=variance_seed,
            )
            if naive_draws is not None:
                bci = quantile_posterior(
                    naive_draws,
                    fit,
                    exc,
                    cov,
                    target,
                    settings.variance_method,
                    settings.alpha,
                    refine=False,
                    mc_draws=settings.mc_draws,
                    seed=variance_seed,
                )
        summaries.append(QuantileSummary(target, freq_q, adjusted=baci, naive=bci))

    return MarginalAnalysis(
        exceedances=exc,
        fit=fit,
        covariance=cov,
        frequentist=freq,
        adjusted_draws=adjusted_draws,
        naive_draws=naive_draws,
        adjusted=adjusted,
        naive=naive,
        quantiles=tuple(summaries),
    )
