import logging
import math

import numpy as np
import pytest

from potdep.covariance import SerialCovariance, sigma_matrix
from potdep.errors import InvalidArgumentError
from potdep.frequentist import (
    EllipsoidRegion,
    Interval,
    QuantileTarget,
    chi2_quantile,
    confidence_ellipsoid,
    membership,
    param_intervals,
    quantile_interval,
    quantile_point,
)
from potdep.gpd import GpParams
from potdep.likelihood import ExceedanceSet, MleFit, fisher_info
from potdep.names import VarianceMethod


def _fit(gamma: float, sigma: float, k: int = 100) -> MleFit:
    return MleFit(GpParams(gamma, sigma), loglik=-1.0, converged=True, iterations=1, k=k)


def _exceedances(threshold: float, k: int = 100) -> ExceedanceSet:
    return ExceedanceSet(
        threshold=threshold, excesses=np.linspace(0.1, 5.0, k), n=10 * k, k=k
    )


def _covariance(omega: list[list[float]]) -> SerialCovariance:
    eye = np.eye(2)
    omega_hat = np.asarray(omega, dtype=float)
    return SerialCovariance(
        sigma_hat=omega_hat,
        omega_hat=omega_hat,
        a_hat=eye,
        c_hat=eye,
        d_hat=eye,
        info_hat=eye,
        r11=1.0,
        r_int=1.0,
    )


def test_chi2_quantile() -> None:
    assert chi2_quantile(0.95) == pytest.approx(5.991465, abs=1e-6)


def test_quantile_target_from_levels() -> None:
    target = QuantileTarget.from_levels(0.999, 1000, 100)
    assert target.p == pytest.approx(0.01)
    assert target.tau_i == pytest.approx(0.9)
    with pytest.raises(InvalidArgumentError):
        QuantileTarget.from_levels(0.9, 1000, 100)
    with pytest.raises(InvalidArgumentError):
        QuantileTarget.from_levels(1.0, 1000, 100)


def test_quantile_target_from_ratio() -> None:
    target = QuantileTarget.from_ratio(0.01, 1000, 100)
    assert target.tau_e == pytest.approx(0.999)
    with pytest.raises(InvalidArgumentError):
        QuantileTarget.from_ratio(0.0, 1000, 100)


def test_confidence_ellipsoid_center_and_boundary() -> None:
    fit = _fit(0.2, 2.0)
    cov = SerialCovariance.from_sigma(sigma_matrix(0.2, 1.3, 1.5), 2.0, fisher_info(0.2))
    region = confidence_ellipsoid(fit, cov, 0.05)
    assert region.radius2 == pytest.approx(5.991465 / 100, rel=1e-6)
    assert membership(region, fit.params.as_array())

    root = np.linalg.cholesky(cov.omega_hat)
    eps = math.sqrt(region.radius2)
    boundary = region.center + root @ np.array([eps, 0.0])
    assert region.quadratic_form(boundary) == pytest.approx(region.radius2, rel=1e-12)
    assert not region.contains(region.center + root @ np.array([1.01 * eps, 0.0]))


def test_confidence_ellipsoid_is_invariant_to_data_units() -> None:
    sigma = sigma_matrix(0.2, 1.3, 1.5)
    info = fisher_info(0.2)
    base = confidence_ellipsoid(_fit(0.2, 2.0), SerialCovariance.from_sigma(sigma, 2.0, info), 0.05)
    scaled = confidence_ellipsoid(
        _fit(0.2, 6.0), SerialCovariance.from_sigma(sigma, 6.0, info), 0.05
    )
    for point in ([0.25, 2.1], [0.1, 1.7], [0.5, 3.0]):
        moved = [point[0], 3.0 * point[1]]
        assert scaled.quadratic_form(moved) == pytest.approx(base.quadratic_form(point), rel=1e-10)
        assert scaled.contains(moved) == base.contains(point)


def test_degenerate_ellipsoid() -> None:
    region = EllipsoidRegion(
        center=np.zeros(2), shape=np.diag([0.0, 1.0]), radius2=1.0, alpha=0.05
    )
    assert region.quadratic_form([0.0, 0.5]) == pytest.approx(0.25)
    assert region.quadratic_form([0.1, 0.0]) == math.inf
    assert region.contains([0.0, 0.0])


def test_param_intervals() -> None:
    cov = _covariance([[4.0, 0.0], [0.0, 1.0]])
    gamma_ci, sigma_ci = param_intervals(_fit(0.5, 2.0), cov, 0.05)
    assert gamma_ci.lower == pytest.approx(0.108007, abs=1e-6)
    assert gamma_ci.upper == pytest.approx(0.891993, abs=1e-6)
    assert sigma_ci.center == pytest.approx(2.0)
    assert sigma_ci.width == pytest.approx(2.0 * 0.1959964, abs=1e-6)


def test_param_intervals_collapse() -> None:
    gamma_ci, _ = param_intervals(_fit(0.5, 2.0), _covariance([[0.0, 0.0], [0.0, 1.0]]), 0.05)
    assert gamma_ci == Interval(0.5, 0.5)
    gamma_ci, _ = param_intervals(_fit(0.5, 2.0), _covariance([[4.0, 0.0], [0.0, 1.0]]), 0.999999)
    assert gamma_ci.width < 1e-5


def test_param_intervals_reject_bad_alpha() -> None:
    with pytest.raises(InvalidArgumentError):
        param_intervals(_fit(0.5, 2.0), _covariance([[4.0, 0.0], [0.0, 1.0]]), 1.0)


def test_quantile_point_examples(caplog: pytest.LogCaptureFixture) -> None:
    target = QuantileTarget.from_ratio(0.01, 1000, 100)
    assert quantile_point(_fit(0.5, 2.0), _exceedances(10.0), target) == pytest.approx(46.0)

    target = QuantileTarget.from_ratio(math.exp(-1.0), 1000, 100)
    assert quantile_point(_fit(0.0, 1.0), _exceedances(0.0), target) == pytest.approx(1.0)

    with caplog.at_level(logging.WARNING, logger="potdep"):
        at_threshold = quantile_point(
            _fit(0.3, 1.0), _exceedances(4.0), QuantileTarget.from_ratio(1.0, 1000, 100)
        )
    assert at_threshold == 4.0
    assert "no extrapolation" in caplog.text


def test_quantile_interval_half_width() -> None:
    fit = _fit(0.0, 1.0)
    cov = SerialCovariance.independence(fit)
    target = QuantileTarget.from_ratio(math.exp(-2.0), 1000, 100)
    result = quantile_interval(fit, cov, _exceedances(0.0), target, 0.05)
    # q_0(e^2) = 2 and the delta variance is 1 - 4/2 + 8/4 + 4/16
    assert result.point == pytest.approx(2.0)
    assert result.sigma_q == pytest.approx(1.25)
    assert result.q_gamma == pytest.approx(2.0)
    half = 2.0 * 1.959964 * math.sqrt(1.25) / 10.0
    assert result.interval.lower == pytest.approx(2.0 - half, rel=1e-6)
    assert result.interval.upper == pytest.approx(2.0 + half, rel=1e-6)
    assert result.method is VarianceMethod.DELTA


def test_quantile_intervals_are_nested_in_alpha() -> None:
    fit = _fit(0.2, 1.5)
    cov = SerialCovariance.from_sigma(sigma_matrix(0.2, 1.3, 1.5), 1.5, fisher_info(0.2))
    target = QuantileTarget.from_levels(0.999, 1000, 100)
    wide = quantile_interval(fit, cov, _exceedances(3.0), target, 0.05).interval
    narrow = quantile_interval(fit, cov, _exceedances(3.0), target, 0.5).interval
    assert wide.lower < narrow.lower < narrow.upper < wide.upper


def test_quantile_interval_warns_on_far_extrapolation(caplog: pytest.LogCaptureFixture) -> None:
    fit = _fit(0.1, 1.0, k=16)
    cov = SerialCovariance.independence(fit)
    target = QuantileTarget.from_ratio(1e-3, 160, 16)
    with caplog.at_level(logging.WARNING, logger="potdep"):
        quantile_interval(fit, cov, _exceedances(0.0, k=16), target, 0.05)
    assert "extrapolation too far" in caplog.text
