"""Monte-Carlo acceptance runs. Deselected by default; run with `pytest -m slow`."""

import os

import numpy as np
import pytest

from potdep.bayes.posterior import sample_posterior
from potdep.bayes.priors import PriorSpec
from potdep.bayes.sampler import ChainSettings
from potdep.covariance import SerialCovariance
from potdep.gpd import GpParams, gp_quantile
from potdep.likelihood import ExceedanceSet, mle_fit
from potdep.names import Estimator, ModelName, Target
from potdep.rng import stream
from potdep.sim.experiments import CoverageSettings, coverage_experiment, sigma_experiment
from potdep.sim.models import ModelSpec, model_info, simulate
from potdep.sim.truths import oracle_sample

pytestmark = pytest.mark.slow

WORKERS = os.cpu_count() or 1


def _gp_excesses(gamma: float, k: int, seed: int) -> ExceedanceSet:
    u = stream(seed, 0).random(k)
    excesses = np.asarray(gp_quantile(u, GpParams(gamma, 1.0)), dtype=float)
    return ExceedanceSet(threshold=0.0, excesses=excesses, n=k + 1, k=k)


def test_mle_error_shrinks_at_root_k_rate() -> None:
    errors = {}
    for k in (100, 400, 1600):
        gammas = np.array([mle_fit(_gp_excesses(0.3, k, rep)).params.gamma for rep in range(200)])
        errors[k] = gammas - 0.3
    medians = [np.median(np.abs(errors[k])) for k in (100, 400, 1600)]
    assert medians[0] > medians[1] > medians[2]
    ratio = np.sqrt(np.mean(errors[100] ** 2)) / np.sqrt(np.mean(errors[1600] ** 2))
    assert 3.0 <= ratio <= 5.0


def test_adjusted_posterior_matches_its_gaussian_limit() -> None:
    exc = _gp_excesses(0.2, 1000, 77)
    fit = mle_fit(exc)
    cov = SerialCovariance.independence(fit)
    mcmc = ChainSettings(chains=2, iterations=40_000, seed=5)
    draws = sample_posterior(exc, fit, cov, PriorSpec.flat(), mcmc, adjusted=True)
    sample = np.column_stack([draws.gamma, draws.sigma])
    limit = cov.omega_hat / exc.k
    se = np.sqrt(np.diag(limit))
    assert np.all(np.abs(sample.mean(axis=0) - fit.params.as_array()) < 3 * se)
    spread = np.cov(sample, rowvar=False)
    assert np.linalg.norm(spread - limit) / np.linalg.norm(limit) < 0.25


@pytest.mark.parametrize(
    ("model", "tol"),
    [
        (ModelName.AR1_T1, 0.05),
        (ModelName.ARMA11_T2, 0.05),
        (ModelName.ARCH1, 0.05),
        (ModelName.AR1_GARCH11, 0.05),
        (ModelName.CLAYTON_EXP, 0.05),
        (ModelName.CLAYTON_POWER, 0.08),
    ],
)
def test_generators_reproduce_their_tail_index(model: ModelName, tol: float) -> None:
    n = 1_000_000
    info = model_info(model)
    if info.dynamic:
        # judged on the innovations
        x = oracle_sample(model, n, seed=1)
    else:
        x = simulate(ModelSpec(model, n, 1)).values
    gamma = mle_fit(ExceedanceSet.from_sample(x, 10_000)).params.gamma
    assert gamma == pytest.approx(info.gamma0, abs=tol)


def test_sliding_blocks_track_the_large_sample_sigma() -> None:
    frame = sigma_experiment(ModelName.AR1_T1, 2000, 100, [50], 500, seed=3)
    rows = frame.set_index(["mode", "component"])
    s11 = rows.loc[("sliding", "s11")]
    assert s11["mean"] == pytest.approx(s11["reference"], rel=0.15)
    for comp in ("s12", "s22"):
        sliding = rows.loc[("sliding", comp)]
        disjoint = rows.loc[("disjoint", comp)]
        assert abs(sliding["mean"] - sliding["reference"]) <= abs(
            disjoint["mean"] - disjoint["reference"]
        )


def test_ar1_cauchy_coverage() -> None:
    settings = CoverageSettings(oracle_size=2_000_000, seed=2024)
    report = coverage_experiment(
        [ModelName.AR1_T1], [(2000, 100)], 500, settings, workers=WORKERS
    )

    def coverage(estimator: Estimator, target: Target) -> float:
        cell = report.cell(ModelName.AR1_T1, 2000, 100, estimator, target)
        assert cell.valid
        return cell.coverage

    assert coverage(Estimator.BACI, Target.GAMMA) == pytest.approx(0.93, abs=0.04)
    assert coverage(Estimator.BCI, Target.GAMMA) == pytest.approx(0.52, abs=0.05)
    assert coverage(Estimator.FCI, Target.GAMMA) == pytest.approx(0.85, abs=0.05)
    assert coverage(Estimator.BACR, Target.THETA) == pytest.approx(0.81, abs=0.05)


def test_arch_coverage() -> None:
    settings = CoverageSettings(oracle_size=2_000_000, seed=2025)
    report = coverage_experiment([ModelName.ARCH1], [(2000, 100)], 500, settings, workers=WORKERS)
    gamma = report.cell(ModelName.ARCH1, 2000, 100, Estimator.BACI, Target.GAMMA)
    quantile = report.cell(ModelName.ARCH1, 2000, 100, Estimator.BACI, Target.QUANTILE)
    assert gamma.coverage == pytest.approx(0.95, abs=0.05)
    assert quantile.coverage == pytest.approx(0.95, abs=0.05)


def test_dynamic_quantile_coverage() -> None:
    settings = CoverageSettings(oracle_size=2_000_000, seed=2026)
    report = coverage_experiment(
        [ModelName.AR1_GARCH11], [(2000, 50)], 300, settings, workers=WORKERS
    )
    adjusted = report.cell(ModelName.AR1_GARCH11, 2000, 50, Estimator.BACI, Target.QUANTILE)
    naive = report.cell(ModelName.AR1_GARCH11, 2000, 50, Estimator.BCI, Target.QUANTILE)
    assert adjusted.coverage == pytest.approx(0.96, abs=0.05)
    assert naive.coverage == pytest.approx(0.88, abs=0.06)
