"""Pseudo-posterior sampling, credible regions and refined quantile posteriors."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import AdaptiveMetropolis, ChainSettings
from potdep.covariance import SerialCovariance
from potdep.errors import InternalError, InvalidArgumentError, NonConvergenceError
from potdep.frequentist import (
    EllipsoidRegion,
    Interval,
    QuantileTarget,
    chi2_quantile,
    quantile_point,
    scalar_quantile_variance,
)
from potdep.gpd import GpParams, extrapolation_factor, q_integral
from potdep.likelihood import ExceedanceSet, MleFit, fisher_info, mean_logpdf
from potdep.names import VarianceMethod

logger = logging.getLogger(__name__)

MIN_SUMMARY_DRAWS = 1000
ACCEPTANCE_BAND = (0.1, 0.5)


@dataclass(frozen=True)
class PosteriorDraws:
    """Post-burn-in draws of theta* = (gamma*, sigma*), chains stacked."""

    draws: NDArray[np.float64] = field(repr=False)
    acceptance_rate: float
    chain_length: int
    burn_in: int
    adjusted: bool
    rhat: float
    chains: int = 1
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.draws.ndim != 2 or self.draws.shape[1] != 2:
            raise InvalidArgumentError("draws must have shape (N, 2)")

    @classmethod
    def from_array(cls, draws: ArrayLike, adjusted: bool = False) -> PosteriorDraws:
        """Wrap externally produced draws; sampler diagnostics are left neutral."""
        arr = np.asarray(draws, dtype=float)
        return cls(
            draws=arr,
            acceptance_rate=math.nan,
            chain_length=len(arr),
            burn_in=0,
            adjusted=adjusted,
            rhat=math.nan,
        )

    @property
    def gamma(self) -> NDArray[np.float64]:
        return self.draws[:, 0]

    @property
    def sigma(self) -> NDArray[np.float64]:
        return self.draws[:, 1]

    def __len__(self) -> int:
        return int(self.draws.shape[0])

    def to_frame(self, q_draws: NDArray[np.float64] | None = None) -> pd.DataFrame:
        frame = pd.DataFrame({"gamma": self.gamma, "sigma": self.sigma})
        if q_draws is not None:
            frame["q_tauE"] = q_draws
        return frame

    def to_csv(self, path: Path, q_draws: NDArray[np.float64] | None = None) -> None:
        self.to_frame(q_draws).to_csv(path, index=False)

    def diagnostics(self) -> dict[str, Any]:
        return {
            "acceptance_rate": self.acceptance_rate,
            "chain_length": self.chain_length,
            "burn_in": self.burn_in,
            "chains": self.chains,
            "rhat": self.rhat,
            "adjusted": self.adjusted,
            "draws": len(self),
        }


def _mapped(
    theta_hat: NDArray[np.float64], d_hat: NDArray[np.float64], vstar: NDArray[np.float64]
) -> NDArray[np.float64]:
    return np.asarray(theta_hat + d_hat @ (vstar - theta_hat))


def _check_invertible(d_hat: NDArray[np.float64]) -> None:
    if d_hat.shape != (2, 2) or not np.all(np.isfinite(d_hat)):
        raise InvalidArgumentError("d_hat must be a finite 2x2 matrix")
    if np.linalg.cond(d_hat) > 1e12:
        raise InvalidArgumentError("d_hat is singular")


def adjusted_loglik(
    vstar: GpParams | ArrayLike,
    fit: MleFit,
    d_hat: ArrayLike,
    exc: ExceedanceSet,
) -> float:
    """Mean log-likelihood at theta_hat + d_hat (vstar - theta_hat); -inf outside Theta."""
    d = np.asarray(d_hat, dtype=float)
    _check_invertible(d)
    v = vstar.as_array() if isinstance(vstar, GpParams) else np.asarray(vstar, dtype=float)
    theta_hat = fit.params.as_array()
    if np.array_equal(v, theta_hat):
        return mean_logpdf(exc.excesses, fit.params.gamma, fit.params.sigma)
    gamma, sigma = (float(t) for t in _mapped(theta_hat, d, v))
    if gamma <= -1.0 or sigma <= 0.0:
        return -math.inf
    return mean_logpdf(exc.excesses, gamma, sigma)


def _initial_cov(
    fit: MleFit, cov: SerialCovariance | None, adjusted: bool
) -> NDArray[np.float64]:
    """Proposal covariance in (gamma, log sigma) coordinates."""
    gamma, sigma = fit.params.gamma, fit.params.sigma
    if adjusted and cov is not None:
        omega = cov.omega_hat
    else:
        try:
            a = np.diag([1.0, sigma])
            omega = a @ np.linalg.inv(fisher_info(gamma)) @ a
        except InvalidArgumentError:
            omega = np.diag([0.25, 0.25 * sigma * sigma])
    jac = np.diag([1.0, 1.0 / sigma])
    return np.asarray(jac @ omega @ jac / fit.k)


def sample_posterior(
    exc: ExceedanceSet,
    fit: MleFit,
    cov: SerialCovariance | None,
    prior: PriorSpec,
    mcmc: ChainSettings,
    adjusted: bool = True,
    d_override: ArrayLike | None = None,
) -> PosteriorDraws:
    """Sample exp(k L*(theta*)) lambda(theta*) with adaptive random-walk Metropolis.

    The chain runs on (gamma*, log sigma*); the log-Jacobian log sigma* is
    added to the target. adjusted=False gives the naive pseudo-posterior
    (d_hat = identity). d_override replaces d_hat.
    """
    if not fit.converged:
        raise InvalidArgumentError("posterior sampling requires a converged fit")
    if adjusted and cov is None and d_override is None:
        raise InvalidArgumentError("adjusted posterior requires an assembled covariance")

    theta_hat = fit.params.as_array()
    if d_override is not None:
        d_hat = np.asarray(d_override, dtype=float)
    elif adjusted and cov is not None:
        d_hat = cov.d_hat
    else:
        d_hat = np.eye(2)
    _check_invertible(d_hat)

    log_prior = prior.bind(theta_hat, d_hat)
    excesses = exc.excesses
    k = exc.k
    g_hat, s_hat = float(theta_hat[0]), float(theta_hat[1])
    d00, d01, d10, d11 = (float(v) for v in d_hat.ravel())

    def log_target(v: NDArray[np.float64]) -> float:
        gamma_star, log_sigma_star = float(v[0]), float(v[1])
        if abs(log_sigma_star) > 700.0:
            return -math.inf
        sigma_star = math.exp(log_sigma_star)
        lp = log_prior(gamma_star, sigma_star)
        if lp == -math.inf:
            return lp
        dg, ds = gamma_star - g_hat, sigma_star - s_hat
        gamma = g_hat + d00 * dg + d01 * ds
        sigma = s_hat + d10 * dg + d11 * ds
        if gamma <= -1.0 or sigma <= 0.0:
            return -math.inf
        ll = mean_logpdf(excesses, gamma, sigma)
        if ll == -math.inf:
            return ll
        return k * ll + lp + log_sigma_star

    gamma0 = prior.gamma_prior.value if prior.gamma_fixed else g_hat
    x0 = np.array([gamma0, math.log(s_hat)])
    free = [not prior.gamma_fixed, True]
    sampler = AdaptiveMetropolis(log_target, _initial_cov(fit, cov, adjusted), mcmc, free=free)
    result = sampler.run(x0)

    notes: list[str] = []
    diagnostics = {"rhat": result.rhat, "acceptance_rate": result.acceptance_rate}
    if result.rhat > mcmc.rhat_error:
        raise NonConvergenceError(
            f"R-hat {result.rhat:.3f} exceeds {mcmc.rhat_error} after {mcmc.iterations} iterations",
            best=None,
            diagnostics=diagnostics,
        )
    if result.rhat > mcmc.rhat_clean:
        notes.append(f"R-hat {result.rhat:.3f} above the clean threshold {mcmc.rhat_clean}")
    lo, hi = ACCEPTANCE_BAND
    if not lo <= result.acceptance_rate <= hi:
        notes.append(f"acceptance rate {result.acceptance_rate:.3f} outside [{lo}, {hi}]")
    for note in notes:
        logger.warning("Posterior sampler: %s", note)

    samples = result.samples
    draws = np.column_stack([samples[:, 0], np.exp(samples[:, 1])])
    draws.setflags(write=False)
    logger.info(
        "Sampled %d draws (adjusted=%s, acceptance %.3f, rhat %.4f)",
        len(draws),
        adjusted,
        result.acceptance_rate,
        result.rhat,
    )
    return PosteriorDraws(
        draws=draws,
        acceptance_rate=result.acceptance_rate,
        chain_length=mcmc.iterations,
        burn_in=mcmc.burn_in,
        adjusted=adjusted,
        rhat=result.rhat,
        chains=mcmc.chains,
        warnings=tuple(notes),
    )


def credible_summaries(
    draws: PosteriorDraws, alpha: float, min_draws: int = MIN_SUMMARY_DRAWS
) -> tuple[EllipsoidRegion, Interval, Interval]:
    """Ellipsoid from the draw mean and covariance, and equi-tailed marginal intervals."""
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if len(draws) < min_draws:
        raise InvalidArgumentError(f"need at least {min_draws} draws, got {len(draws)}")
    arr = draws.draws
    region = EllipsoidRegion(
        center=arr.mean(axis=0),
        shape=np.cov(arr, rowvar=False),
        radius2=chi2_quantile(1.0 - alpha),
        alpha=alpha,
    )
    probs = [alpha / 2.0, 1.0 - alpha / 2.0]
    g_lo, g_hi = np.quantile(draws.gamma, probs)
    s_lo, s_hi = np.quantile(draws.sigma, probs)
    return region, Interval(float(g_lo), float(g_hi)), Interval(float(s_lo), float(s_hi))


@dataclass(frozen=True)
class QuantilePosterior:
    q_draws: NDArray[np.float64] = field(repr=False)
    c_tilde: float
    q_hat: float
    v_hat: float
    sigma_hat_q: float
    interval: Interval
    alpha: float
    refined: bool
    target: QuantileTarget

    def __post_init__(self) -> None:
        if self.c_tilde <= 0.0:
            raise InternalError(f"c_tilde must be positive, got {self.c_tilde}")
        if not np.all(np.isfinite(self.q_draws)):
            raise InternalError("quantile draws contain non-finite values")

    @property
    def median(self) -> float:
        return float(np.median(self.q_draws))

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau_e": self.target.tau_e,
            "p": self.target.p,
            "q_hat": self.q_hat,
            "median": self.median,
            **self.interval.to_dict(),
            "alpha": self.alpha,
            "c_tilde": self.c_tilde,
            "v_hat": self.v_hat,
            "sigma_hat_q": self.sigma_hat_q,
            "refined": self.refined,
        }


def quantile_posterior(
    draws: PosteriorDraws,
    fit: MleFit,
    exc: ExceedanceSet,
    cov: SerialCovariance,
    target: QuantileTarget,
    variance_method: VarianceMethod = VarianceMethod.DELTA,
    alpha: float = 0.05,
    refine: bool = True,
    c_tilde: float | None = None,
    mc_draws: int = 20_000,
    seed: int = 0,
) -> QuantilePosterior:
    """Map parameter draws to quantile draws, rescaled about Q_hat by C~.

    Unrefined draws Q~ = X_(n-k) + sigma (p^-gamma - 1)/gamma. The refined draws
    are Q_hat + C~ (Q~ - Q_hat) with C~ = (Sigma_q / V_hat)^(1/2), where V_hat is
    k Var(Q~) / (sigma_hat q_gamma(1/p))^2. refine=False or an explicit c_tilde
    overrides C~.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if c_tilde is not None and c_tilde <= 0.0:
        raise InvalidArgumentError(f"c_tilde must be positive, got {c_tilde}")
    if len(draws) < 2:
        raise InvalidArgumentError("quantile posterior needs at least two draws")

    factor = np.asarray(extrapolation_factor(draws.gamma, target.p), dtype=float)
    q_tilde = exc.threshold + draws.sigma * factor
    q_hat = quantile_point(fit, exc, target)
    sigma_q = scalar_quantile_variance(fit, cov, target, variance_method, mc_draws, seed)
    norm = fit.params.sigma * q_integral(fit.params.gamma, 1.0 / target.p)
    v_hat = fit.k * float(np.var(q_tilde, ddof=1)) / (norm * norm)

    if c_tilde is not None:
        c = float(c_tilde)
    elif not refine or np.ptp(q_tilde) == 0.0:
        c = 1.0
    else:
        if not math.isfinite(v_hat) or v_hat <= 0.0:
            raise InternalError(f"posterior quantile variance is {v_hat}")
        c = math.sqrt(sigma_q / v_hat)

    q_draws = q_tilde.copy() if c == 1.0 else q_hat + c * (q_tilde - q_hat)
    q_draws.setflags(write=False)
    lo, hi = np.quantile(q_draws, [alpha / 2.0, 1.0 - alpha / 2.0])
    logger.debug("quantile posterior: V_hat=%.4g, Sigma_q=%.4g, C~=%.4g", v_hat, sigma_q, c)
    return QuantilePosterior(
        q_draws=q_draws,
        c_tilde=c,
        q_hat=q_hat,
        v_hat=v_hat,
        sigma_hat_q=sigma_q,
        interval=Interval(float(lo), float(hi)),
        alpha=alpha,
        refined=refine and c_tilde is None,
        target=target,
    )
