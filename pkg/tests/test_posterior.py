import math

import numpy as np
import pytest

from potdep.bayes.posterior import (
    PosteriorDraws,
    adjusted_loglik,
    credible_summaries,
    quantile_posterior,
    sample_posterior,
)
from potdep.bayes.priors import GammaPrior, PriorSpec, SigmaPrior
from potdep.bayes.sampler import ChainSettings
from potdep.covariance import SerialCovariance, sigma_matrix
from potdep.errors import InvalidArgumentError
from potdep.frequentist import QuantileTarget
from potdep.gpd import GpParams, extrapolation_factor, q_integral
from potdep.likelihood import ExceedanceSet, MleFit, empirical_loglik, fisher_info, mle_fit
from potdep.names import GammaPriorKind, SigmaPriorKind
from potdep.rng import stream

FAST = ChainSettings(chains=2, iterations=6000, seed=21)


@pytest.fixture(scope="module")
def exponential_fit() -> tuple[ExceedanceSet, MleFit]:
    data = stream(31, 0).exponential(size=5000)
    exc = ExceedanceSet.from_sample(data, 500)
    return exc, mle_fit(exc)


def _synthetic_draws(size: int = 4000, seed: int = 0) -> PosteriorDraws:
    rng = stream(seed, 1)
    gamma = 0.1 + 0.05 * rng.standard_normal(size)
    sigma = np.exp(0.05 * rng.standard_normal(size))
    return PosteriorDraws.from_array(np.column_stack([gamma, sigma]), adjusted=True)


def _quantile_setup() -> tuple[MleFit, ExceedanceSet, SerialCovariance, QuantileTarget]:
    fit = MleFit(GpParams(0.1, 1.0), loglik=-1.0, converged=True, iterations=1, k=200)
    exc = ExceedanceSet(
        threshold=3.0, excesses=np.linspace(0.01, 4.0, 200), n=2000, k=200
    )
    cov = SerialCovariance.from_sigma(sigma_matrix(0.1, 1.4, 1.6), 1.0, fisher_info(0.1))
    return fit, exc, cov, QuantileTarget.from_levels(0.9995, 2000, 200)


def test_adjusted_loglik_fixed_point_and_identity(
    exponential_fit: tuple[ExceedanceSet, MleFit],
) -> None:
    exc, fit = exponential_fit
    d_hat = np.array([[1.5, 0.1], [0.2, 0.8]])
    assert adjusted_loglik(fit.params, fit, d_hat, exc) == empirical_loglik(exc, fit.params)
    point = GpParams(0.05, 0.9)
    assert adjusted_loglik(point, fit, np.eye(2), exc) == pytest.approx(
        empirical_loglik(exc, point), rel=1e-12
    )


def test_adjusted_loglik_outside_theta(exponential_fit: tuple[ExceedanceSet, MleFit]) -> None:
    exc, fit = exponential_fit
    assert adjusted_loglik([0.0, -5.0], fit, np.eye(2), exc) == -math.inf
    with pytest.raises(InvalidArgumentError):
        adjusted_loglik([0.0, 1.0], fit, np.array([[1.0, 2.0], [2.0, 4.0]]), exc)


def test_naive_posterior_concentrates_at_the_mle(
    exponential_fit: tuple[ExceedanceSet, MleFit],
) -> None:
    exc, fit = exponential_fit
    draws = sample_posterior(exc, fit, None, PriorSpec.flat(), FAST, adjusted=False)
    assert len(draws) == 2 * FAST.kept
    assert not draws.adjusted
    assert draws.rhat <= FAST.rhat_error
    se = np.sqrt(np.diag(np.linalg.inv(fisher_info(fit.params.gamma)))) / math.sqrt(exc.k)
    assert abs(draws.gamma.mean() - fit.params.gamma) < 3 * se[0]
    assert draws.gamma.std() == pytest.approx(se[0], rel=0.2)
    assert abs(draws.sigma.mean() - fit.params.sigma) < 3 * se[1] * fit.params.sigma


def test_point_mass_prior_fixes_gamma(exponential_fit: tuple[ExceedanceSet, MleFit]) -> None:
    exc, fit = exponential_fit
    prior = PriorSpec(
        gamma_prior=GammaPrior(kind=GammaPriorKind.FIXED, value=0.0),
        sigma_prior=SigmaPrior(kind=SigmaPriorKind.VAGUE),
    )
    draws = sample_posterior(exc, fit, None, prior, FAST, adjusted=False)
    assert np.all(draws.gamma == 0.0)
    # with gamma = 0 the posterior of sigma under a flat-in-log prior is inverse gamma
    shape, rate = exc.k, float(exc.excesses.sum())
    assert draws.sigma.mean() == pytest.approx(rate / (shape - 1), rel=0.02)


def test_adjusted_posterior_spread_follows_sigma_hat(
    exponential_fit: tuple[ExceedanceSet, MleFit],
) -> None:
    exc, fit = exponential_fit
    gamma = fit.params.gamma
    inflated = sigma_matrix(gamma, 3.0, 3.0)
    cov = SerialCovariance.from_sigma(inflated, fit.params.sigma, fisher_info(gamma))
    adjusted = sample_posterior(exc, fit, cov, PriorSpec.flat(), FAST, adjusted=True)
    naive = sample_posterior(exc, fit, cov, PriorSpec.flat(), FAST, adjusted=False)
    assert adjusted.adjusted
    ratio = adjusted.gamma.var() / naive.gamma.var()
    assert ratio == pytest.approx(3.0, rel=0.3)


def test_sample_posterior_preconditions(exponential_fit: tuple[ExceedanceSet, MleFit]) -> None:
    exc, fit = exponential_fit
    with pytest.raises(InvalidArgumentError):
        sample_posterior(exc, fit, None, PriorSpec(), FAST, adjusted=True)
    unconverged = MleFit(fit.params, fit.loglik, converged=False, iterations=1, k=fit.k)
    with pytest.raises(InvalidArgumentError):
        sample_posterior(exc, unconverged, None, PriorSpec(), FAST, adjusted=False)


def test_credible_summaries_on_gaussian_draws() -> None:
    rng = stream(41, 0)
    draws = PosteriorDraws.from_array(rng.standard_normal((100_000, 2)))
    region, gamma_ci, sigma_ci = credible_summaries(draws, 0.05)
    assert gamma_ci.lower == pytest.approx(-1.96, abs=0.03)
    assert gamma_ci.upper == pytest.approx(1.96, abs=0.03)
    assert sigma_ci.center == pytest.approx(0.0, abs=0.03)
    fresh = rng.standard_normal((20_000, 2))
    covered = np.mean([region.contains(point) for point in fresh])
    assert covered == pytest.approx(0.95, abs=0.02)


def test_credible_summaries_degenerate_and_short() -> None:
    draws = PosteriorDraws.from_array(np.tile([0.2, 1.5], (1000, 1)))
    region, gamma_ci, sigma_ci = credible_summaries(draws, 0.05)
    assert gamma_ci.width == 0.0
    assert sigma_ci.lower == sigma_ci.upper == 1.5
    assert region.contains([0.2, 1.5])
    assert not region.contains([0.21, 1.5])
    with pytest.raises(InvalidArgumentError):
        credible_summaries(PosteriorDraws.from_array(np.zeros((10, 2))), 0.05)


def test_quantile_posterior_unit_rescale_is_exact() -> None:
    fit, exc, cov, target = _quantile_setup()
    draws = _synthetic_draws()
    q_tilde = exc.threshold + draws.sigma * np.asarray(
        extrapolation_factor(draws.gamma, target.p), dtype=float
    )
    unrefined = quantile_posterior(draws, fit, exc, cov, target, refine=False)
    np.testing.assert_array_equal(unrefined.q_draws, q_tilde)
    assert unrefined.c_tilde == 1.0
    assert not unrefined.refined
    forced = quantile_posterior(draws, fit, exc, cov, target, c_tilde=1.0)
    np.testing.assert_array_equal(forced.q_draws, q_tilde)


def test_quantile_posterior_doubling_doubles_the_interval() -> None:
    fit, exc, cov, target = _quantile_setup()
    draws = _synthetic_draws()
    one = quantile_posterior(draws, fit, exc, cov, target, c_tilde=1.0)
    two = quantile_posterior(draws, fit, exc, cov, target, c_tilde=2.0)
    assert two.interval.lower - two.q_hat == pytest.approx(
        2.0 * (one.interval.lower - one.q_hat), rel=1e-9
    )
    assert two.interval.upper - two.q_hat == pytest.approx(
        2.0 * (one.interval.upper - one.q_hat), rel=1e-9
    )


def test_quantile_posterior_refinement_matches_target_variance() -> None:
    fit, exc, cov, target = _quantile_setup()
    refined = quantile_posterior(_synthetic_draws(), fit, exc, cov, target)
    assert refined.refined
    assert refined.c_tilde == pytest.approx(math.sqrt(refined.sigma_hat_q / refined.v_hat))
    norm = fit.params.sigma * q_integral(fit.params.gamma, 1.0 / target.p) / math.sqrt(fit.k)
    assert np.var(refined.q_draws, ddof=1) == pytest.approx(
        refined.sigma_hat_q * norm * norm, rel=1e-9
    )


def test_quantile_posterior_degenerate_draws() -> None:
    fit, exc, cov, target = _quantile_setup()
    draws = PosteriorDraws.from_array(np.tile(fit.params.as_array(), (50, 1)))
    result = quantile_posterior(draws, fit, exc, cov, target)
    assert result.c_tilde == 1.0
    assert np.all(result.q_draws == result.q_hat)


def test_quantile_posterior_frame_columns() -> None:
    fit, exc, cov, target = _quantile_setup()
    draws = _synthetic_draws()
    q = quantile_posterior(draws, fit, exc, cov, target)
    frame = draws.to_frame(q.q_draws)
    assert list(frame.columns) == ["gamma", "sigma", "q_tauE"]
    assert len(frame) == len(draws)
    with pytest.raises(InvalidArgumentError):
        quantile_posterior(draws, fit, exc, cov, target, c_tilde=0.0)
