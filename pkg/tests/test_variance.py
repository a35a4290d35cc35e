import math

import numpy as np
import pytest

from potdep.covariance import sigma_matrix
from potdep.errors import InvalidArgumentError
from potdep.names import VarianceMethod
from potdep.variance import (
    VARIANCE_METHODS,
    VarianceInputs,
    delta_variance,
    independence_variance,
    mc_variance,
    quantile_variance,
)


def _inputs(**overrides: object) -> VarianceInputs:
    values: dict[str, object] = {
        "gamma": 0.0,
        "sigma_hat": sigma_matrix(0.0, 1.0, 1.0),
        "r11": 1.0,
        "p": math.exp(-2.0),
        "k": 100,
    }
    values.update(overrides)
    return VarianceInputs(**values)  # type: ignore[arg-type]


def test_registry_holds_every_method() -> None:
    assert set(VARIANCE_METHODS) == set(VarianceMethod)


def test_delta_variance_closed_form() -> None:
    assert delta_variance(_inputs()) == pytest.approx(1.25)


def test_delta_matches_independence_under_independence() -> None:
    inputs = _inputs(gamma=0.3, sigma_hat=sigma_matrix(0.3, 1.0, 1.0), p=0.02)
    assert delta_variance(inputs) == pytest.approx(independence_variance(inputs), rel=1e-12)


def test_independence_ignores_serial_terms() -> None:
    serial = _inputs(gamma=0.3, sigma_hat=sigma_matrix(0.3, 2.0, 2.5), r11=2.0, p=0.02)
    plain = _inputs(gamma=0.3, sigma_hat=sigma_matrix(0.3, 1.0, 1.0), p=0.02)
    assert independence_variance(serial) == independence_variance(plain)
    assert delta_variance(serial) > delta_variance(plain)


def test_mc_variance_approaches_delta_for_large_k() -> None:
    inputs = _inputs(
        gamma=0.2, sigma_hat=sigma_matrix(0.2, 1.3, 1.5), r11=1.3, p=0.05, k=1_000_000,
        mc_draws=200_000, seed=4,
    )
    assert mc_variance(inputs) == pytest.approx(delta_variance(inputs), rel=0.02)


def test_mc_variance_is_seeded() -> None:
    first = mc_variance(_inputs(seed=1, mc_draws=5000))
    assert mc_variance(_inputs(seed=1, mc_draws=5000)) == first
    assert mc_variance(_inputs(seed=2, mc_draws=5000)) != first


def test_quantile_variance_dispatch() -> None:
    inputs = _inputs()
    assert quantile_variance("delta", inputs) == delta_variance(inputs)
    assert quantile_variance(VarianceMethod.INDEPENDENCE, inputs) == pytest.approx(1.25)
    with pytest.raises(InvalidArgumentError):
        quantile_variance("bootstrap", inputs)


def test_inputs_reject_p_outside_unit_interval() -> None:
    with pytest.raises(InvalidArgumentError):
        _inputs(p=1.0)
    with pytest.raises(InvalidArgumentError):
        _inputs(p=0.0)


def test_variance_is_positive_across_levels() -> None:
    for p in np.geomspace(1e-4, 0.5, 9):
        assert delta_variance(_inputs(gamma=0.5, sigma_hat=sigma_matrix(0.5, 1.0, 1.0), p=p)) > 0
