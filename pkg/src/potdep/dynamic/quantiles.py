"""Dynamic (conditional on the past) tail-quantile posteriors."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from potdep.bayes.posterior import QuantilePosterior
from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import ChainSettings
from potdep.dynamic.arma import ArmaSpec, forecast_paths, innovations
from potdep.dynamic.residuals import ResidualSet, default_warmup, make_residuals
from potdep.errors import InvalidArgumentError
from potdep.frequentist import Interval
from potdep.names import Stage
from potdep.pipeline import MarginalAnalysis, MarginalSettings, analyze_marginal
from potdep.rng import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_MAX_HORIZON = 24


@dataclass(frozen=True)
class DynamicQuantile:
    """Draws of the conditional quantile: shift + scale * refined residual-quantile draws."""

    marginal: QuantilePosterior
    shift: float
    scale: float = 1.0
    horizon: int = 1

    @property
    def q_draws(self) -> NDArray[np.float64]:
        return self.shift + self.scale * self.marginal.q_draws

    @property
    def interval(self) -> Interval:
        inner = self.marginal.interval
        return Interval(
            self.shift + self.scale * inner.lower, self.shift + self.scale * inner.upper
        )

    @property
    def median(self) -> float:
        return self.shift + self.scale * self.marginal.median

    @property
    def tau_e(self) -> float:
        return self.marginal.target.tau_e

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau_e": self.tau_e,
            "horizon": self.horizon,
            "shift": self.shift,
            "median": self.median,
            **self.interval.to_dict(),
            "residual_quantile": self.marginal.to_dict(),
        }


@dataclass(frozen=True)
class DynamicAnalysis:
    residuals: ResidualSet = field(repr=False)
    analysis: MarginalAnalysis = field(repr=False)
    quantiles: tuple[DynamicQuantile, ...]
    horizon: int = 1

    def to_dict(self) -> dict[str, Any]:
        res = self.residuals
        return {
            "horizon": self.horizon,
            "n": res.n,
            "discarded": res.discarded,
            "coefficients": res.coefficients.to_dict(),
            "forecast": res.one_step_pred,
            "residual_analysis": self.analysis.to_dict(),
            "quantiles": [q.to_dict() for q in self.quantiles],
        }


def _quantile_settings(settings: MarginalSettings) -> MarginalSettings:
    if settings.reaches(Stage.QUANTILE):
        return settings
    return replace(settings, stage=Stage.QUANTILE)


def dynamic_quantile_posterior(
    res: ResidualSet,
    settings: MarginalSettings,
    prior: PriorSpec,
    mcmc: ChainSettings,
    seed: int = 0,
    shift: float | None = None,
) -> DynamicAnalysis:
    """Posterior of Q(tau_E) of the next observation given the past.

    Runs the marginal stack on the residuals and shifts the refined quantile
    draws by the one-step forecast (or by `shift` when given).
    """
    analysis = analyze_marginal(res.residuals, _quantile_settings(settings), prior, mcmc, seed)
    v_hat = res.one_step_pred if shift is None else shift
    quantiles = tuple(
        DynamicQuantile(q.adjusted, v_hat, res.w_hat, horizon=1)
        for q in analysis.quantiles
        if q.adjusted is not None
    )
    return DynamicAnalysis(residuals=res, analysis=analysis, quantiles=quantiles)


def h_step_residuals(
    y: ArrayLike,
    res: ResidualSet,
    horizon: int,
    exog: ArrayLike | None = None,
) -> ResidualSet:
    """Residuals Y_(s+i) - v_(s+i, h) against h-step forecasts, and the h-step forecast.

    Forecasts are built iteratively from the (h-1)-step forecasts with the
    coefficients in `res`; exog needs `horizon` rows beyond the series.
    """
    yy = np.asarray(y, dtype=float)
    n_bar, s, spec = yy.size, res.discarded, res.spec
    if s < horizon + spec.lags - 1:
        raise InvalidArgumentError(
            f"warm-up s_n={s} too short for horizon {horizon} with {spec.lags} lag(s)"
        )
    z = None
    if exog is not None:
        z = np.asarray(exog, dtype=float)
        z = z[:, None] if z.ndim == 1 else z
        if z.shape[0] < n_bar + horizon:
            raise InvalidArgumentError(f"exog needs {horizon} row(s) beyond the series")
    e = innovations(yy, spec, res.coefficients, None if z is None else z[:n_bar])
    targets = np.arange(s, n_bar)
    in_sample = forecast_paths(yy, e, res.coefficients, targets - horizon, horizon, z)
    ahead = forecast_paths(yy, e, res.coefficients, np.array([n_bar - 1]), horizon, z)
    residuals = yy[s:] - in_sample[:, -1]
    residuals.setflags(write=False)
    return ResidualSet(
        residuals=residuals,
        discarded=s,
        coefficients=res.coefficients,
        one_step_pred=float(ahead[0, -1]),
        spec=spec,
        fitted=res.fitted,
    )


def h_step_quantile(
    y: ArrayLike,
    spec: ArmaSpec,
    horizons: int,
    settings: MarginalSettings,
    prior: PriorSpec,
    mcmc: ChainSettings,
    exog: ArrayLike | None = None,
    seed: int = 0,
    s_n: int | None = None,
    max_horizon: int = DEFAULT_MAX_HORIZON,
) -> list[DynamicAnalysis]:
    """Dynamic quantile posteriors for horizons 1..horizons.

    Horizon 1 is exactly dynamic_quantile_posterior on make_residuals; each
    horizon reuses the same seed.
    """
    if not 1 <= horizons <= max_horizon:
        raise InvalidArgumentError(f"horizon must lie in [1, {max_horizon}], got {horizons}")
    yy = np.asarray(y, dtype=float)
    res1 = make_residuals(yy, spec, exog, s_n)
    out = [dynamic_quantile_posterior(res1, settings, prior, mcmc, seed)]
    for h in range(2, horizons + 1):
        res_h = h_step_residuals(yy, res1, h, exog)
        step = dynamic_quantile_posterior(res_h, settings, prior, mcmc, seed)
        out.append(
            replace(
                step,
                horizon=h,
                quantiles=tuple(replace(q, horizon=h) for q in step.quantiles),
            )
        )
    return out


def rolling_quantile(
    y: ArrayLike,
    spec: ArmaSpec,
    window: int,
    settings: MarginalSettings,
    prior: PriorSpec,
    mcmc: ChainSettings,
    exog: ArrayLike | None = None,
    step: int = 1,
    seed: int = 0,
) -> pd.DataFrame:
    """Re-fit the mean model and the dynamic posterior in a rolling window.

    One row per (window end, tau_E): the forecast of the next observation, the
    posterior median and the credible interval of its conditional quantile.
    """
    yy = np.asarray(y, dtype=float)
    if window > yy.size:
        raise InvalidArgumentError(f"window {window} exceeds the series length {yy.size}")
    if step < 1:
        raise InvalidArgumentError("step must be at least 1")
    z = None
    if exog is not None:
        z = np.asarray(exog, dtype=float)
        z = z[:, None] if z.ndim == 1 else z
    rows: list[dict[str, Any]] = []
    s_n = default_warmup(window)
    for end in range(window, yy.size + 1, step):
        exog_slice = None
        if z is not None:
            if end >= z.shape[0]:
                break
            exog_slice = z[end - window : end + 1]
        res = make_residuals(yy[end - window : end], spec, exog_slice, s_n)
        dyn = dynamic_quantile_posterior(res, settings, prior, mcmc, derive_seed(seed, end))
        for q in dyn.quantiles:
            rows.append(
                {
                    "end": end,
                    "forecast": res.one_step_pred,
                    "tau_e": q.tau_e,
                    "median": q.median,
                    "lower": q.interval.lower,
                    "upper": q.interval.upper,
                }
            )
        logger.debug("rolling window ending at %d done", end)
    return pd.DataFrame(rows, columns=["end", "forecast", "tau_e", "median", "lower", "upper"])


def exceedance_backtest(
    y: ArrayLike, res: ResidualSet, quantile: DynamicQuantile
) -> dict[str, float]:
    """Share of in-sample observations above v_hat_i + {median, lower, upper}.

    v_hat_i = Y_i - residual_i is the fitted conditional mean over the last n
    observations. The expected share at a correct quantile is 1 - tau_E.
    """
    yy = np.asarray(y, dtype=float)
    if yy.size != res.n_bar:
        raise InvalidArgumentError("series length does not match the residual set")
    r = res.residuals
    inner = quantile.marginal
    return {
        "median": float(np.mean(r > inner.median)),
        "lower": float(np.mean(r > inner.interval.lower)),
        "upper": float(np.mean(r > inner.interval.upper)),
        "expected": 1.0 - quantile.tau_e,
    }
