"""Confidence regions for the GP parameters and extreme quantiles."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtri
from scipy.stats import chi2

from potdep.covariance import SerialCovariance
from potdep.errors import InvalidArgumentError
from potdep.gpd import extrapolation_factor, q_integral
from potdep.likelihood import ExceedanceSet, MleFit
from potdep.names import VarianceMethod
from potdep.variance import VarianceInputs, quantile_variance

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")


def normal_quantile(prob: float) -> float:
    return float(ndtri(prob))


def chi2_quantile(prob: float, df: int = 2) -> float:
    return float(chi2.ppf(prob, df))


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict[str, float]:
        return {"lower": self.lower, "upper": self.upper}


@dataclass(frozen=True)
class EllipsoidRegion:
    """{v : (v - center)^T shape^-1 (v - center) <= radius2}."""

    center: NDArray[np.float64]
    shape: NDArray[np.float64]
    radius2: float
    alpha: float

    def quadratic_form(self, point: ArrayLike) -> float:
        d = np.asarray(point, dtype=float) - self.center
        if not np.any(d):
            return 0.0
        try:
            return float(d @ np.linalg.solve(self.shape, d))
        except np.linalg.LinAlgError:
            pass
        # singular shape: directions outside its range are infinitely far
        sol, *_ = np.linalg.lstsq(self.shape, d, rcond=None)
        if not np.allclose(self.shape @ sol, d, rtol=1e-9, atol=0.0):
            return math.inf
        return float(d @ sol)

    def contains(self, point: ArrayLike) -> bool:
        return self.quadratic_form(point) <= self.radius2

    def to_dict(self) -> dict[str, Any]:
        return {
            "center": self.center.tolist(),
            "shape": self.shape.tolist(),
            "radius2": self.radius2,
            "alpha": self.alpha,
        }


def membership(region: EllipsoidRegion, point: ArrayLike) -> bool:
    return region.contains(point)


@dataclass(frozen=True)
class QuantileTarget:
    """Extreme level tau_e and its ratio p = (1 - tau_e)/(1 - tau_i) to the threshold level."""

    tau_e: float
    p: float
    tau_i: float

    @classmethod
    def from_levels(cls, tau_e: float, n: int, k: int) -> QuantileTarget:
        tau_i = 1.0 - k / n
        if not tau_i < tau_e < 1.0:
            raise InvalidArgumentError(
                f"tau_e={tau_e} must lie in (1 - k/n, 1) = ({tau_i}, 1)"
            )
        return cls(tau_e=tau_e, p=(1.0 - tau_e) / (1.0 - tau_i), tau_i=tau_i)

    @classmethod
    def from_ratio(cls, p: float, n: int, k: int) -> QuantileTarget:
        if p <= 0.0:
            raise InvalidArgumentError(f"p must be positive, got {p}")
        tau_i = 1.0 - k / n
        return cls(tau_e=1.0 - p * (1.0 - tau_i), p=p, tau_i=tau_i)


def confidence_ellipsoid(fit: MleFit, cov: SerialCovariance, alpha: float) -> EllipsoidRegion:
    _check_alpha(alpha)
    return EllipsoidRegion(
        center=fit.params.as_array(),
        shape=cov.omega_hat,
        radius2=chi2_quantile(1.0 - alpha) / fit.k,
        alpha=alpha,
    )


def param_intervals(fit: MleFit, cov: SerialCovariance, alpha: float) -> tuple[Interval, Interval]:
    """Equi-tailed intervals for gamma and for the scale a(n/k)."""
    _check_alpha(alpha)
    z = normal_quantile(1.0 - alpha / 2.0)
    half = z * np.sqrt(np.diag(cov.omega_hat)) / math.sqrt(fit.k)
    gamma, sigma = fit.params.gamma, fit.params.sigma
    return (
        Interval(gamma - float(half[0]), gamma + float(half[0])),
        Interval(sigma - float(half[1]), sigma + float(half[1])),
    )


def quantile_point(fit: MleFit, exc: ExceedanceSet, target: QuantileTarget) -> float:
    if target.p >= 1.0:
        logger.warning("p=%g >= 1: the quantile lies inside the sample, no extrapolation", target.p)
    gamma, sigma = fit.params.gamma, fit.params.sigma
    return exc.threshold + sigma * float(extrapolation_factor(gamma, target.p))


@dataclass(frozen=True)
class QuantileInterval:
    point: float
    interval: Interval
    alpha: float
    method: VarianceMethod
    sigma_q: float
    """Scalar variance of the normalized quantile estimator."""
    q_gamma: float = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "point": self.point,
            **self.interval.to_dict(),
            "alpha": self.alpha,
            "method": str(self.method),
            "sigma_q": self.sigma_q,
        }


def scalar_quantile_variance(
    fit: MleFit,
    cov: SerialCovariance,
    target: QuantileTarget,
    method: VarianceMethod = VarianceMethod.DELTA,
    mc_draws: int = 20_000,
    seed: int = 0,
) -> float:
    inputs = VarianceInputs(
        gamma=fit.params.gamma,
        sigma_hat=cov.sigma_hat,
        r11=cov.r11,
        p=target.p,
        k=fit.k,
        mc_draws=mc_draws,
        seed=seed,
    )
    return quantile_variance(method, inputs)


def quantile_interval(
    fit: MleFit,
    cov: SerialCovariance,
    exc: ExceedanceSet,
    target: QuantileTarget,
    alpha: float,
    variance_method: VarianceMethod = VarianceMethod.DELTA,
    mc_draws: int = 20_000,
    seed: int = 0,
) -> QuantileInterval:
    _check_alpha(alpha)
    k = fit.k
    if -math.log(target.p) > math.sqrt(k) / 2.0:
        logger.warning(
            "-log p = %.2f exceeds sqrt(k)/2 = %.2f; extrapolation too far for k=%d",
            -math.log(target.p),
            math.sqrt(k) / 2.0,
            k,
        )
    point = quantile_point(fit, exc, target)
    sigma_q = scalar_quantile_variance(fit, cov, target, variance_method, mc_draws, seed)
    q = q_integral(fit.params.gamma, 1.0 / target.p)
    z = normal_quantile(1.0 - alpha / 2.0)
    half = fit.params.sigma * q * z * math.sqrt(sigma_q) / math.sqrt(k)
    return QuantileInterval(
        point=point,
        interval=Interval(point - half, point + half),
        alpha=alpha,
        method=VarianceMethod(variance_method),
        sigma_q=sigma_q,
        q_gamma=q,
    )
