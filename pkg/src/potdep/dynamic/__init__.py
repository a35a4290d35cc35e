"""potdep dynamic (conditional quantile) subsystem."""

from potdep.dynamic.arma import ArmaCoefficients, ArmaFit, ArmaSpec, arma_cls_fit
from potdep.dynamic.quantiles import (
    DynamicAnalysis,
    DynamicQuantile,
    dynamic_quantile_posterior,
    exceedance_backtest,
    h_step_quantile,
    rolling_quantile,
)
from potdep.dynamic.residuals import ResidualSet, order_gap_statistic, make_residuals

__all__ = [
    "ArmaCoefficients",
    "ArmaFit",
    "ArmaSpec",
    "DynamicAnalysis",
    "DynamicQuantile",
    "ResidualSet",
    "arma_cls_fit",
    "dynamic_quantile_posterior",
    "order_gap_statistic",
    "exceedance_backtest",
    "h_step_quantile",
    "make_residuals",
    "rolling_quantile",
]
