"""Registry of methods for the scalar variance of the normalized quantile estimator.

Every method returns the variance of sqrt(k) (Q_hat - Q) / (a q_gamma(1/p)),
combining the parameter block Sigma_hat with a threshold term of variance R(1, 1).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from potdep.covariance import sigma_matrix
from potdep.errors import InvalidArgumentError
from potdep.gpd import extrapolation_factor, q_integral
from potdep.names import VarianceMethod
from potdep.rng import stream

logger = logging.getLogger(__name__)

_MC_STREAM = 0x5EED


@dataclass(frozen=True)
class VarianceInputs:
    gamma: float
    sigma_hat: NDArray[np.float64]
    """Normalized-scale covariance of (gamma_hat, sigma_hat / a)."""
    r11: float
    p: float
    k: int
    mc_draws: int = 20_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise InvalidArgumentError(f"quantile variance needs 0 < p < 1, got p={self.p}")


QuantileVarianceFn = Callable[[VarianceInputs], float]


def _gradient(gamma: float, p: float) -> tuple[NDArray[np.float64], float]:
    """Gradient of sigma (p^-gamma - 1)/gamma at sigma = 1, divided by q_gamma(1/p)."""
    q = q_integral(gamma, 1.0 / p)
    d = float(extrapolation_factor(gamma, p))
    return np.array([1.0, d / q]), q


def delta_variance(inp: VarianceInputs) -> float:
    grad, q = _gradient(inp.gamma, inp.p)
    return float(grad @ inp.sigma_hat @ grad + inp.r11 / (q * q))


def independence_variance(inp: VarianceInputs) -> float:
    grad, q = _gradient(inp.gamma, inp.p)
    sigma = sigma_matrix(inp.gamma, 1.0, 1.0)
    return float(grad @ sigma @ grad + 1.0 / (q * q))


def mc_variance(inp: VarianceInputs) -> float:
    """Empirical variance of the exact quantile map under the Gaussian limit."""
    rng = stream(inp.seed, _MC_STREAM)
    cov = np.zeros((3, 3))
    cov[0, 0] = inp.r11
    cov[1:, 1:] = inp.sigma_hat
    z = rng.multivariate_normal(np.zeros(3), cov, size=inp.mc_draws, method="eigh")
    root_k = math.sqrt(inp.k)
    gamma = inp.gamma + z[:, 1] / root_k
    scale = 1.0 + z[:, 2] / root_k
    base = float(extrapolation_factor(inp.gamma, inp.p))
    shifted = scale * np.asarray(extrapolation_factor(gamma, inp.p))
    q = q_integral(inp.gamma, 1.0 / inp.p)
    normalized = (z[:, 0] + root_k * (shifted - base)) / q
    return float(np.var(normalized, ddof=1))


VARIANCE_METHODS: dict[VarianceMethod, QuantileVarianceFn] = {
    VarianceMethod.DELTA: delta_variance,
    VarianceMethod.INDEPENDENCE: independence_variance,
    VarianceMethod.MC: mc_variance,
}


def quantile_variance(method: VarianceMethod | str, inputs: VarianceInputs) -> float:
    """Dispatch to a registered method. Unknown names raise InvalidArgumentError."""
    try:
        fn = VARIANCE_METHODS[VarianceMethod(method)]
    except (ValueError, KeyError) as exc:
        raise InvalidArgumentError(f"unknown variance method: {method!r}") from exc
    value = fn(inputs)
    logger.debug("quantile variance (%s) = %.6g", method, value)
    if not math.isfinite(value) or value < 0.0:
        raise InvalidArgumentError(f"variance method {method} produced {value}")
    return value
