import math

import numpy as np
import pytest
from scipy.signal import lfilter

from potdep.dynamic.arma import ArmaCoefficients, ArmaSpec
from potdep.dynamic.quantiles import h_step_residuals
from potdep.dynamic.residuals import default_warmup, order_gap_statistic, make_residuals
from potdep.errors import InvalidArgumentError
from potdep.rng import stream


@pytest.mark.parametrize(("n_bar", "warmup"), [(525, 23), (2045, 45), (1000, 32)])
def test_default_warmup(n_bar: int, warmup: int) -> None:
    s = default_warmup(n_bar)
    assert s == warmup
    n = n_bar - s
    assert n + math.ceil(math.sqrt(n)) <= n_bar


def test_noise_residuals_track_the_series() -> None:
    y = stream(1, 0).normal(size=2000)
    res = make_residuals(y, ArmaSpec(p=1))
    assert res.fitted
    assert res.n + res.discarded == res.n_bar == 2000
    assert np.corrcoef(res.residuals, y[res.discarded :])[0, 1] > 0.99


def test_supplied_coefficients_are_applied_exactly() -> None:
    y = stream(2, 0).normal(size=400)
    coef = ArmaCoefficients(phi=np.array([0.6]))
    res = make_residuals(y, ArmaSpec(p=1, include_mean=False), s_n=20, coefficients=coef)
    assert not res.fitted
    assert res.discarded == 20
    np.testing.assert_allclose(res.residuals, y[20:] - 0.6 * y[19:-1], atol=1e-12)
    assert res.one_step_pred == pytest.approx(0.6 * y[-1])
    assert res.w_hat == 1.0


def test_exog_needs_a_row_beyond_the_series() -> None:
    rng = stream(3, 0)
    y = rng.normal(size=300)
    z = rng.normal(size=300)
    spec = ArmaSpec(p=1, exog_dim=1)
    with pytest.raises(InvalidArgumentError):
        make_residuals(y, spec, exog=z)
    z_next = np.append(z, 1.0)
    res = make_residuals(y, spec, exog=z_next)
    coef = res.coefficients
    expected = coef.mean + coef.phi[0] * (y[-1] - coef.mean) + coef.beta[0] * 1.0
    assert res.one_step_pred == pytest.approx(expected)


def test_warmup_bounds() -> None:
    y = stream(4, 0).normal(size=300)
    with pytest.raises(InvalidArgumentError):
        make_residuals(y, ArmaSpec(p=2), s_n=1)
    with pytest.raises(InvalidArgumentError):
        make_residuals(y, ArmaSpec(p=1), s_n=300)


def test_h_step_residuals_for_known_ar1() -> None:
    y = 1.0 + lfilter([1.0], [1.0, -0.7], stream(5, 0).normal(size=500))
    spec = ArmaSpec(p=1)
    coef = ArmaCoefficients(phi=np.array([0.7]), mean=1.0)
    res1 = make_residuals(y, spec, s_n=30, coefficients=coef)
    res3 = h_step_residuals(y, res1, 3)
    expected = y[30:] - (1.0 + 0.7**3 * (y[27:-3] - 1.0))
    np.testing.assert_allclose(res3.residuals, expected, atol=1e-10)
    assert res3.one_step_pred == pytest.approx(1.0 + 0.7**3 * (y[-1] - 1.0))
    assert res3.discarded == 30


def test_h_step_residuals_need_enough_warmup() -> None:
    y = stream(6, 0).normal(size=200)
    coef = ArmaCoefficients(phi=np.array([0.2]), mean=0.0)
    res1 = make_residuals(y, ArmaSpec(p=1), s_n=2, coefficients=coef)
    with pytest.raises(InvalidArgumentError):
        h_step_residuals(y, res1, 5)


def test_order_gap_statistic() -> None:
    x = stream(7, 0).standard_t(4, size=1000)
    assert order_gap_statistic(x, x, 50, 1.0) == 0.0
    assert order_gap_statistic(x + 0.1, x, 50, 2.0) == pytest.approx(math.sqrt(50) * 0.05)
    with pytest.raises(InvalidArgumentError):
        order_gap_statistic(x[:-1], x, 50, 1.0)
    with pytest.raises(InvalidArgumentError):
        order_gap_statistic(x, x, 50, 0.0)
