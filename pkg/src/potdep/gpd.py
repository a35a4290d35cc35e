"""Generalized Pareto distribution primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import overload

import numpy as np
from numpy.typing import ArrayLike, NDArray

from potdep.errors import InvalidArgumentError

GAMMA_EPS = 1e-6
"""Below this |gamma| the exponential-limit branches are used."""

_SERIES_CUTOFF = 0.1
_SERIES_TERMS = 14


@dataclass(frozen=True)
class Support:
    lower: float
    upper: float

    def contains(self, x: float) -> bool:
        return self.lower <= x < self.upper


@dataclass(frozen=True)
class GpParams:
    """Shape gamma and scale sigma of a GP distribution."""

    gamma: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and math.isfinite(self.sigma)):
            raise InvalidArgumentError(f"GP parameters must be finite, got {self}")
        if self.sigma <= 0.0:
            raise InvalidArgumentError(f"GP scale must be positive, got sigma={self.sigma}")

    @property
    def support(self) -> Support:
        upper = math.inf if self.gamma >= 0.0 else self.sigma / abs(self.gamma)
        return Support(0.0, upper)

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.gamma, self.sigma])

    @classmethod
    def from_array(cls, v: ArrayLike) -> GpParams:
        a = np.asarray(v, dtype=float)
        return cls(float(a[0]), float(a[1]))


def _finite_or_raise(x: NDArray[np.float64], name: str) -> None:
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} must be finite")


@overload
def gp_logpdf(x: float, params: GpParams) -> float: ...
@overload
def gp_logpdf(x: NDArray[np.float64], params: GpParams) -> NDArray[np.float64]: ...
def gp_logpdf(x: float | NDArray[np.float64], params: GpParams) -> float | NDArray[np.float64]:
    """Log density; -inf outside the support."""
    xa = np.asarray(x, dtype=float)
    _finite_or_raise(xa, "x")
    out = logpdf_unchecked(xa, params.gamma, params.sigma)
    return float(out) if out.ndim == 0 else out


def logpdf_unchecked(x: NDArray[np.float64], gamma: float, sigma: float) -> NDArray[np.float64]:
    """gp_logpdf without argument validation, for inner loops."""
    z = x / sigma
    log_sigma = math.log(sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        if abs(gamma) < GAMMA_EPS:
            return np.where(z >= 0.0, -log_sigma - z, -np.inf)
        t = gamma * z
        inside = (z >= 0.0) & (t > -1.0)
        val = -log_sigma - (1.0 + 1.0 / gamma) * np.log1p(np.where(inside, t, 0.0))
        return np.where(inside, val, -np.inf)


@overload
def gp_cdf(x: float, params: GpParams) -> float: ...
@overload
def gp_cdf(x: NDArray[np.float64], params: GpParams) -> NDArray[np.float64]: ...
def gp_cdf(x: float | NDArray[np.float64], params: GpParams) -> float | NDArray[np.float64]:
    xa = np.asarray(x, dtype=float)
    _finite_or_raise(xa, "x")
    gamma = params.gamma
    z = np.maximum(xa / params.sigma, 0.0)
    if abs(gamma) < GAMMA_EPS:
        out = -np.expm1(-z)
    else:
        t = gamma * z
        inside = t > -1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(inside, -np.expm1(-np.log1p(np.where(inside, t, 0.0)) / gamma), 1.0)
    out = np.where(xa <= 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


@overload
def gp_quantile(p: float, params: GpParams) -> float: ...
@overload
def gp_quantile(p: NDArray[np.float64], params: GpParams) -> NDArray[np.float64]: ...
def gp_quantile(p: float | NDArray[np.float64], params: GpParams) -> float | NDArray[np.float64]:
    pa = np.asarray(p, dtype=float)
    if not np.all((pa > 0.0) & (pa < 1.0)):
        raise InvalidArgumentError("gp_quantile requires 0 < p < 1")
    out = params.sigma * extrapolation_factor(params.gamma, 1.0 - pa)
    return float(out) if np.ndim(out) == 0 else np.asarray(out)


def extrapolation_factor(gamma: ArrayLike, p: ArrayLike) -> NDArray[np.float64] | float:
    """(p^-gamma - 1)/gamma, with -log p when |gamma| < GAMMA_EPS.

    Broadcasts over gamma and p. Scalar inputs give a float.
    """
    g = np.asarray(gamma, dtype=float)
    lp = np.log(np.asarray(p, dtype=float))
    small = np.abs(g) < GAMMA_EPS
    safe_g = np.where(small, 1.0, g)
    out = np.where(small, -lp, np.expm1(-safe_g * lp) / safe_g)
    return float(out) if out.ndim == 0 else out


def q_integral(gamma: float, x: float) -> float:
    """Integral of v^(gamma-1) log v over [1, x]."""
    if not (math.isfinite(gamma) and math.isfinite(x)):
        raise InvalidArgumentError("q_integral arguments must be finite")
    if x < 1.0:
        raise InvalidArgumentError(f"q_integral requires x >= 1, got {x}")
    log_x = math.log(x)
    if abs(gamma) < GAMMA_EPS:
        return 0.5 * log_x * log_x
    u = gamma * log_x
    if abs(u) < _SERIES_CUTOFF:
        # sum_{j>=2} (j-1) u^(j-2) / j!, times log(x)^2
        total = 0.0
        term = 0.5
        for j in range(2, _SERIES_TERMS):
            total += (j - 1) * term
            term *= u / (j + 1)
        return log_x * log_x * total
    return (math.exp(u) * (u - 1.0) + 1.0) / (gamma * gamma)
