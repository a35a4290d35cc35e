"""Residual extraction from a fitted ARMA/ARMAX mean model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from potdep.dynamic.arma import (
    ArmaCoefficients,
    ArmaSpec,
    arma_cls_fit,
    forecast_paths,
    innovations,
)
from potdep.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResidualSet:
    """The last n innovations of a series of length n_bar = n + discarded.

    one_step_pred is the forecast of the next observation; the scale w is 1.
    """

    residuals: NDArray[np.float64] = field(repr=False)
    discarded: int
    coefficients: ArmaCoefficients
    one_step_pred: float
    spec: ArmaSpec
    fitted: bool = True
    """False when the coefficients were supplied rather than estimated."""

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.residuals)):
            raise InvalidArgumentError("residuals must be finite")

    @property
    def n(self) -> int:
        return int(self.residuals.size)

    @property
    def n_bar(self) -> int:
        return self.n + self.discarded

    @property
    def w_hat(self) -> float:
        return 1.0


def default_warmup(n_bar: int) -> int:
    """s_n such that n_bar = n + ceil(sqrt(n)) with n = n_bar - s_n, rounding n down."""
    if n_bar < 2:
        raise InvalidArgumentError("series needs at least two observations")
    n = n_bar - math.ceil(math.sqrt(n_bar))
    while n + 1 + math.ceil(math.sqrt(n + 1)) <= n_bar:
        n += 1
    return n_bar - n


def _exog_matrix(exog: ArrayLike | None) -> NDArray[np.float64] | None:
    if exog is None:
        return None
    z = np.asarray(exog, dtype=float)
    return z[:, None] if z.ndim == 1 else z


def make_residuals(
    y: ArrayLike,
    spec: ArmaSpec,
    exog: ArrayLike | None = None,
    s_n: int | None = None,
    coefficients: ArmaCoefficients | None = None,
) -> ResidualSet:
    """Fit (or apply) the mean model and keep the innovations after the warm-up.

    With exogenous regressors, exog needs one row beyond the series for the
    one-step forecast.
    """
    yy = np.asarray(y, dtype=float)
    n_bar = yy.size
    s = default_warmup(n_bar) if s_n is None else s_n
    if not spec.lags <= s < n_bar:
        raise InvalidArgumentError(f"warm-up s_n={s} must lie in [{spec.lags}, {n_bar})")
    z = _exog_matrix(exog)
    if z is not None and z.shape[0] < n_bar + 1:
        raise InvalidArgumentError("exog needs one row beyond the series for the forecast")

    if coefficients is None:
        fit = arma_cls_fit(yy, spec, None if z is None else z[:n_bar])
        coef, e = fit.coefficients, fit.innovations
        logger.info("Mean model %s fitted by %s: %s", spec, fit.method, coef.to_dict())
    else:
        coef = coefficients
        e = innovations(yy, spec, coef, None if z is None else z[:n_bar])

    pred = forecast_paths(yy, e, coef, np.array([n_bar - 1]), 1, z)
    residuals = e[s:].copy()
    residuals.setflags(write=False)
    return ResidualSet(
        residuals=residuals,
        discarded=s,
        coefficients=coef,
        one_step_pred=float(pred[0, 0]),
        spec=spec,
        fitted=coefficients is None,
    )


def order_gap_statistic(
    residuals: ArrayLike, innovations: ArrayLike, k: int, sigma_hat: float
) -> float:
    """sqrt(k) max_i |R_(n-k+i) - X_(n-k+i)| / sigma_hat over i = 0..k.

    R are the residuals and X the true innovations, both sorted; the statistic
    measures how far the residual tail order statistics sit from the true ones.
    """
    r = np.sort(np.asarray(residuals, dtype=float))
    x = np.sort(np.asarray(innovations, dtype=float))
    if r.shape != x.shape:
        raise InvalidArgumentError("residuals and innovations must have the same length")
    n = r.size
    if not 1 <= k < n:
        raise InvalidArgumentError(f"need 1 <= k < n, got k={k}, n={n}")
    if sigma_hat <= 0.0:
        raise InvalidArgumentError("sigma_hat must be positive")
    gap = np.abs(r[n - k - 1 :] - x[n - k - 1 :]).max()
    return float(math.sqrt(k) * gap / sigma_hat)
