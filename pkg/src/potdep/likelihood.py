"""GP pseudo log-likelihood over threshold exceedances and its maximizer."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from potdep.errors import (
    BoundaryError,
    DegenerateSampleError,
    InvalidArgumentError,
    NonConvergenceError,
)
from potdep.gpd import GpParams, logpdf_unchecked

logger = logging.getLogger(__name__)

GAMMA_FLOOR = -1.0
"""Lower edge of the shape range; the likelihood is unbounded below it."""


@dataclass(frozen=True)
class ExceedanceSet:
    """Top-k excesses over the empirical threshold X_(n-k,n), sorted ascending."""

    threshold: float
    excesses: NDArray[np.float64] = field(repr=False)
    n: int
    k: int

    def __post_init__(self) -> None:
        if not 1 <= self.k < self.n:
            raise InvalidArgumentError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if self.excesses.shape != (self.k,):
            raise InvalidArgumentError("excesses must hold exactly k values")

    @classmethod
    def from_sample(cls, data: ArrayLike, k: int) -> ExceedanceSet:
        """Threshold at X_(n-k,n); excesses of the k largest values over it.

        Excesses equal to zero (ties with the threshold) are dropped and k is
        reduced accordingly.
        """
        x = np.asarray(data, dtype=float)
        if x.ndim != 1:
            raise InvalidArgumentError("data must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("data must be finite")
        n = x.size
        if not 1 <= k < n:
            raise InvalidArgumentError(f"need 1 <= k < n, got k={k}, n={n}")
        ordered = np.sort(x)
        threshold = float(ordered[n - k - 1])
        excesses = ordered[n - k :] - threshold
        ties = int(np.count_nonzero(excesses <= 0.0))
        if ties:
            logger.warning("Dropped %d exceedance(s) tied with the threshold %g", ties, threshold)
            excesses = excesses[excesses > 0.0]
        if excesses.size == 0:
            raise DegenerateSampleError("all top-k values are tied with the threshold")
        excesses.setflags(write=False)
        return cls(threshold=threshold, excesses=excesses, n=n, k=int(excesses.size))


@dataclass(frozen=True)
class MleFit:
    params: GpParams
    loglik: float
    converged: bool
    iterations: int
    k: int
    """Number of excesses the fit used."""


def empirical_loglik(exc: ExceedanceSet, params: GpParams) -> float:
    """Mean GP log density of the excesses; -inf if any falls outside the support."""
    if exc.excesses.size == 0:
        raise InvalidArgumentError("empty exceedance set")
    return mean_logpdf(exc.excesses, params.gamma, params.sigma)


def mean_logpdf(excesses: NDArray[np.float64], gamma: float, sigma: float) -> float:
    if sigma <= 0.0 or not math.isfinite(sigma) or not math.isfinite(gamma):
        return -math.inf
    return float(np.mean(logpdf_unchecked(excesses, gamma, sigma)))


# --- Derivatives ---

_SERIES_CUTOFF = 1e-2
_SERIES_TERMS = 16


def _log1p_coeffs() -> NDArray[np.float64]:
    j = np.arange(_SERIES_TERMS + 3, dtype=float)
    c = np.zeros_like(j)
    c[1:] = (-1.0) ** (j[1:] + 1) / j[1:]
    return c


_L = _log1p_coeffs()


def _h1(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """((1+u) log(1+u) - u) / u^2, stable at u = 0."""
    # (1+u) log(1+u) has coefficients l_j + l_(j-1)
    coeffs = _L[2:] + _L[1:-1]
    series = np.polynomial.polynomial.polyval(u, coeffs[:_SERIES_TERMS])
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = ((1.0 + u) * np.log1p(u) - u) / (u * u)
    return np.where(np.abs(u) < _SERIES_CUTOFF, series, direct)


def _h2(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """(2u + 3u^2 - 2 (1+u)^2 log(1+u)) / u^3, stable at u = 0."""
    # (1+u)^2 log(1+u) has coefficients l_j + 2 l_(j-1) + l_(j-2)
    c = _L[3:] + 2.0 * _L[2:-1] + _L[1:-2]
    series = np.polynomial.polynomial.polyval(u, -2.0 * c[:_SERIES_TERMS])
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (2.0 * u + 3.0 * u * u - 2.0 * (1.0 + u) ** 2 * np.log1p(u)) / u**3
    return np.where(np.abs(u) < _SERIES_CUTOFF, series, direct)


def score_and_info(
    exc: ExceedanceSet, params: GpParams
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gradient and negative Hessian of the mean log-likelihood in (gamma, sigma)."""
    return _derivatives(exc.excesses, params.gamma, params.sigma)


def score_contributions(exc: ExceedanceSet, params: GpParams) -> NDArray[np.float64]:
    """Per-excess score in (gamma, sigma), one row per excess."""
    s_gamma, s_sigma, *_ = _pointwise(exc.excesses, params.gamma, params.sigma)
    return np.column_stack([s_gamma, s_sigma])


def _pointwise(
    excesses: NDArray[np.float64], gamma: float, sigma: float
) -> tuple[NDArray[np.float64], ...]:
    """Score and second-derivative terms of each log density."""
    z = excesses / sigma
    u = gamma * z
    if np.any(u <= -1.0):
        raise BoundaryError(
            f"an excess lies on or beyond the support boundary (gamma={gamma}, sigma={sigma})"
        )
    t = 1.0 + u

    s_gamma = z * z * _h1(u) / t - z / t
    s_sigma = (-1.0 + (1.0 + gamma) * z / t) / sigma
    h_gg = z**3 * _h2(u) / (t * t) + z * z / (t * t)
    h_gs = (z / t - (1.0 + gamma) * z * z / (t * t)) / sigma
    h_ss = (1.0 - (1.0 + gamma) * z * (2.0 + u) / (t * t)) / (sigma * sigma)
    return s_gamma, s_sigma, h_gg, h_gs, h_ss


def _derivatives(
    excesses: NDArray[np.float64], gamma: float, sigma: float
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    s_gamma, s_sigma, h_gg, h_gs, h_ss = _pointwise(excesses, gamma, sigma)
    score = np.array([s_gamma.mean(), s_sigma.mean()])
    hess = np.array([[h_gg.mean(), h_gs.mean()], [h_gs.mean(), h_ss.mean()]])
    return score, -hess


def fisher_info(gamma: float) -> NDArray[np.float64]:
    """Per-observation GP information at theta = (gamma, 1)."""
    if gamma <= -0.5:
        raise InvalidArgumentError(f"GP information is finite only for gamma > -1/2, got {gamma}")
    d = (1.0 + gamma) * (1.0 + 2.0 * gamma)
    return np.array([[2.0 / d, 1.0 / d], [1.0 / d, 1.0 / (1.0 + 2.0 * gamma)]])


# --- Maximum likelihood ---


@dataclass(frozen=True)
class OptimizerSettings:
    min_k: int = 5
    max_simplex_iter: int = 2000
    max_newton_iter: int = 50
    score_tol: float = 1e-8
    """Converged when the scale-free score norm drops below this."""


def _moment_start(z: NDArray[np.float64]) -> tuple[float, float]:
    mean = float(z.mean())
    var = float(z.var())
    ratio = mean * mean / var if var > 0.0 else 1.0
    gamma = max(0.5 * (1.0 - ratio), -0.9)
    sigma = 0.5 * mean * (ratio + 1.0)
    return gamma, sigma


def _feasible(gamma: float, sigma: float, z_max: float) -> tuple[float, float]:
    gamma = max(gamma, -0.9)
    if gamma < 0.0 and z_max >= sigma / abs(gamma):
        sigma = 1.1 * abs(gamma) * z_max
    return gamma, sigma


def mle_fit(exc: ExceedanceSet, opts: OptimizerSettings | None = None) -> MleFit:
    """Maximize the mean log-likelihood over (-1, inf) x (0, inf).

    Simplex search in (gamma, log sigma) from four starts, refined by Newton
    steps on the analytic score. Excesses are rescaled by their mean first so
    the search is scale-equivariant.
    """
    opts = opts or OptimizerSettings()
    if exc.k < opts.min_k:
        raise InvalidArgumentError(f"k={exc.k} is below the minimum {opts.min_k}")
    x = exc.excesses
    if np.ptp(x) == 0.0:
        raise DegenerateSampleError("all excesses are equal")

    scale = float(x.mean())
    z = x / scale
    z_max = float(z.max())

    def objective(v: NDArray[np.float64]) -> float:
        gamma, log_sigma = float(v[0]), float(v[1])
        if gamma <= GAMMA_FLOOR or not math.isfinite(log_sigma) or abs(log_sigma) > 700.0:
            return math.inf
        value = mean_logpdf(z, gamma, math.exp(log_sigma))
        return -value if math.isfinite(value) else math.inf

    starts = [
        _moment_start(z),
        (0.1, 1.0),
        (-0.3, 1.0),
        (1.0, float(np.median(z))),
    ]
    best_v: NDArray[np.float64] | None = None
    best_f = math.inf
    iterations = 0
    for gamma0, sigma0 in starts:
        gamma0, sigma0 = _feasible(gamma0, sigma0, z_max)
        v0 = np.array([gamma0, math.log(sigma0)])
        f0 = objective(v0)
        res = minimize(
            objective,
            v0,
            method="Nelder-Mead",
            options={"maxiter": opts.max_simplex_iter, "xatol": 1e-10, "fatol": 1e-13},
        )
        iterations += int(res.nit)
        v, f = (res.x, float(res.fun)) if res.fun <= f0 else (v0, f0)
        logger.debug("start (%.3f, %.3f) -> %s, value %.6f", gamma0, sigma0, v, -f)
        if f < best_f:
            best_v, best_f = np.asarray(v, dtype=float), f

    if best_v is None or not math.isfinite(best_f):
        raise NonConvergenceError("no start produced a finite likelihood", best=None)

    gamma, sigma = float(best_v[0]), math.exp(float(best_v[1]))
    gamma, sigma, newton_iter, converged = _newton_refine(z, gamma, sigma, opts)
    iterations += newton_iter

    params = GpParams(gamma, sigma * scale)
    loglik = empirical_loglik(exc, params)
    if not math.isfinite(loglik):
        raise NonConvergenceError("optimizer ended outside the support", best=params)
    if not converged:
        if gamma - GAMMA_FLOOR < 1e-3:
            logger.warning("MLE approaches the shape floor gamma=-1 (gamma_hat=%.4f)", gamma)
        else:
            raise NonConvergenceError(
                "score did not vanish after the multistart budget",
                best=params,
                diagnostics={"loglik": loglik, "iterations": iterations},
            )
    if gamma < -0.5:
        logger.warning("gamma_hat=%.4f is below -1/2; regions are not asymptotically honest", gamma)
    return MleFit(
        params=params, loglik=loglik, converged=converged, iterations=iterations, k=exc.k
    )


def _newton_refine(
    z: NDArray[np.float64], gamma: float, sigma: float, opts: OptimizerSettings
) -> tuple[float, float, int, bool]:
    """Newton ascent on the unit-scale excesses with step halving."""
    current = mean_logpdf(z, gamma, sigma)
    for it in range(1, opts.max_newton_iter + 1):
        try:
            score, info = _derivatives(z, gamma, sigma)
        except BoundaryError:
            return gamma, sigma, it, False
        near_zero = _score_norm(score, sigma) < 1e-5
        if _score_norm(score, sigma) < opts.score_tol:
            return gamma, sigma, it, True
        try:
            eig = np.linalg.eigvalsh(info)
            if eig[0] <= 0.0:
                return gamma, sigma, it, near_zero
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            return gamma, sigma, it, near_zero
        scale = 1.0
        for _ in range(40):
            g_new, s_new = gamma + scale * step[0], sigma + scale * step[1]
            if g_new > GAMMA_FLOOR and s_new > 0.0:
                value = mean_logpdf(z, g_new, s_new)
                if value >= current:
                    break
            scale *= 0.5
        else:
            return gamma, sigma, it, near_zero
        gamma, sigma, current = g_new, s_new, value
    score, _ = _derivatives(z, gamma, sigma)
    return gamma, sigma, opts.max_newton_iter, _score_norm(score, sigma) < 1e-5


def _score_norm(score: NDArray[np.float64], sigma: float) -> float:
    return float(max(abs(score[0]), abs(score[1]) * sigma))
