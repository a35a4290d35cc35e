import math

import numpy as np
import pytest
from scipy.integrate import quad

from potdep.errors import InvalidArgumentError
from potdep.gpd import (
    GpParams,
    extrapolation_factor,
    gp_cdf,
    gp_logpdf,
    gp_quantile,
    q_integral,
)


@pytest.mark.parametrize(
    ("x", "gamma", "sigma", "expected"),
    [
        (1.0, 0.0, 1.0, -1.0),
        (0.0, 0.5, 2.0, -math.log(2.0)),
        (1.0, 1.0, 1.0, -2.0 * math.log(2.0)),
        (2.0, -1.0, 1.5, -math.inf),
    ],
)
def test_gp_logpdf_values(x: float, gamma: float, sigma: float, expected: float) -> None:
    assert gp_logpdf(x, GpParams(gamma, sigma)) == pytest.approx(expected, rel=1e-12)


def test_gp_logpdf_negative_excess_is_outside_support() -> None:
    assert gp_logpdf(-0.1, GpParams(0.3, 1.0)) == -math.inf


@pytest.mark.parametrize("gamma", [-0.4, 0.0, 0.5, 1.0, 2.0])
def test_gp_density_integrates_to_one(gamma: float) -> None:
    params = GpParams(gamma, 1.3)
    upper = params.support.upper
    total, _ = quad(lambda x: math.exp(gp_logpdf(x, params)), 0.0, upper, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gp_cdf_and_quantile() -> None:
    assert gp_cdf(math.log(2.0), GpParams(0.0, 1.0)) == pytest.approx(0.5)
    assert gp_cdf(1.0, GpParams(1.0, 1.0)) == pytest.approx(0.5)
    assert gp_quantile(0.5, GpParams(1.0, 1.0)) == pytest.approx(1.0)
    assert gp_quantile(1.0 - math.exp(-1.0), GpParams(0.0, 2.0)) == pytest.approx(2.0)


def test_gp_cdf_is_clamped_outside_support() -> None:
    params = GpParams(-0.5, 1.0)
    assert gp_cdf(-1.0, params) == 0.0
    assert gp_cdf(3.0, params) == 1.0


def test_gp_quantile_inverts_cdf() -> None:
    params = GpParams(0.3, 2.5)
    probs = np.linspace(0.01, 0.99, 25)
    np.testing.assert_allclose(gp_cdf(gp_quantile(probs, params), params), probs, rtol=1e-10)


def test_gp_quantile_rejects_probability_outside_unit_interval() -> None:
    with pytest.raises(InvalidArgumentError):
        gp_quantile(1.0, GpParams(0.1, 1.0))


def test_gp_params_validation() -> None:
    with pytest.raises(InvalidArgumentError):
        GpParams(0.1, 0.0)
    with pytest.raises(InvalidArgumentError):
        GpParams(math.nan, 1.0)
    assert GpParams(-0.5, 2.0).support.upper == pytest.approx(4.0)
    assert GpParams(0.2, 1.0).support.upper == math.inf


def test_exponential_limit_is_continuous_at_gamma_zero() -> None:
    x = np.linspace(0.0, 10.0, 101)
    near = gp_logpdf(x, GpParams(1.5e-6, 1.0))
    at_zero = gp_logpdf(x, GpParams(0.0, 1.0))
    assert np.all(np.abs(near - at_zero) <= 1e-6 * (1.0 + x * x))


def test_extrapolation_factor() -> None:
    assert extrapolation_factor(0.5, 1.0) == pytest.approx(0.0)
    assert extrapolation_factor(0.0, math.exp(-1.0)) == pytest.approx(1.0)
    assert extrapolation_factor(0.5, 0.01) == pytest.approx(18.0)
    values = extrapolation_factor(np.array([0.0, 1.0]), 0.5)
    np.testing.assert_allclose(values, [math.log(2.0), 1.0])


@pytest.mark.parametrize(
    ("gamma", "x", "expected"),
    [
        (0.0, math.e, 0.5),
        (1.0, 2.0, 2.0 * math.log(2.0) - 1.0),
        (-1.0, 10.0, 0.9 - math.log(10.0) / 10.0),
    ],
)
def test_q_integral_values(gamma: float, x: float, expected: float) -> None:
    assert q_integral(gamma, x) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize(("gamma", "x"), [(0.05, 2.0), (-0.01, 50.0), (0.3, 100.0)])
def test_q_integral_matches_quadrature(gamma: float, x: float) -> None:
    expected, _ = quad(lambda v: v ** (gamma - 1.0) * math.log(v), 1.0, x)
    assert q_integral(gamma, x) == pytest.approx(expected, rel=1e-9)


def test_q_integral_at_one_is_zero() -> None:
    assert q_integral(0.7, 1.0) == 0.0


def test_q_integral_rejects_x_below_one() -> None:
    with pytest.raises(InvalidArgumentError):
        q_integral(0.1, 0.5)
