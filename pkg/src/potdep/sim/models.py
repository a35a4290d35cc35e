"""Reference generators for the simulation study."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.signal import lfilter

from potdep.dynamic.arma import ArmaSpec
from potdep.errors import InvalidArgumentError
from potdep.names import ModelName
from potdep.rng import stream

logger = logging.getLogger(__name__)

MIN_BURN_IN = 500

ARCH_OMEGA = 2e-5
ARCH_ALPHA = 0.99
GARCH_ALPHA = 0.4
GARCH_BETA = 0.3
CLAYTON_ETA = {ModelName.CLAYTON_EXP: 0.41, ModelName.CLAYTON_POWER: 1.06}


@dataclass(frozen=True)
class ModelInfo:
    gamma0: float
    dynamic: bool = False
    """Inference targets the innovations of a mean model rather than the series."""
    arma: ArmaSpec | None = None
    recursive: bool = True


MODELS: dict[ModelName, ModelInfo] = {
    ModelName.AR1_T1: ModelInfo(gamma0=1.0),
    ModelName.ARMA11_T2: ModelInfo(gamma0=0.5),
    ModelName.ARCH1: ModelInfo(gamma0=0.493),
    ModelName.CLAYTON_EXP: ModelInfo(gamma0=0.0),
    ModelName.CLAYTON_POWER: ModelInfo(gamma0=-1.0 / 3.0),
    ModelName.ARMA21_T5: ModelInfo(
        gamma0=0.2, dynamic=True, arma=ArmaSpec(p=2, q=1, include_mean=False)
    ),
    ModelName.AR1_GARCH11: ModelInfo(
        gamma0=0.207, dynamic=True, arma=ArmaSpec(p=1, q=0, include_mean=False)
    ),
    ModelName.IID_EXPONENTIAL: ModelInfo(gamma0=0.0, recursive=False),
    ModelName.IID_FRECHET: ModelInfo(gamma0=1.0, recursive=False),
}


def model_info(name: ModelName | str) -> ModelInfo:
    try:
        return MODELS[ModelName(name)]
    except ValueError as exc:
        raise InvalidArgumentError(f"unknown model: {name!r}") from exc


@dataclass(frozen=True)
class ModelSpec:
    name: ModelName
    n: int
    seed: int = 0
    burn_in: int = MIN_BURN_IN

    def __post_init__(self) -> None:
        model_info(self.name)
        if self.n < 1:
            raise InvalidArgumentError("series length must be positive")
        if self.burn_in < MIN_BURN_IN and model_info(self.name).recursive:
            raise InvalidArgumentError(f"burn_in must be at least {MIN_BURN_IN}")


@dataclass(frozen=True)
class SimulatedSeries:
    values: NDArray[np.float64] = field(repr=False)
    innovations: NDArray[np.float64] | None = field(default=None, repr=False)
    """True innovations aligned with values (dynamic models only)."""
    next_mean: float | None = None
    """True conditional mean of the next observation (dynamic models only)."""


Generator = Callable[[int, np.random.Generator], SimulatedSeries]


def _ar1_t1(total: int, rng: np.random.Generator) -> SimulatedSeries:
    eps = rng.standard_t(1, total)
    return SimulatedSeries(np.asarray(lfilter([1.0], [1.0, -0.8], eps)))


def _arma11_t2(total: int, rng: np.random.Generator) -> SimulatedSeries:
    eps = rng.standard_t(2, total)
    return SimulatedSeries(np.asarray(lfilter([1.0, 0.8], [1.0, -0.8], eps)))


def _arch1(total: int, rng: np.random.Generator) -> SimulatedSeries:
    eps = rng.standard_normal(total).tolist()
    out = np.empty(total)
    prev = 0.0
    for i, e in enumerate(eps):
        prev = math.sqrt(ARCH_OMEGA + ARCH_ALPHA * prev * prev) * e
        out[i] = prev
    return SimulatedSeries(out)


def clayton_survival_chain(total: int, eta: float, rng: np.random.Generator) -> NDArray[np.float64]:
    """Markov chain V_i = 1 - U_i whose consecutive pairs follow a Clayton copula.

    Each step inverts the conditional copula C(v2 | v1) at a fresh uniform w:
    v2 = ((w^(-eta/(1+eta)) - 1) v1^(-eta) + 1)^(-1/eta).
    """
    if eta <= 0.0:
        raise InvalidArgumentError("Clayton parameter must be positive")
    w = rng.random(total)
    power = (w ** (-eta / (1.0 + eta)) - 1.0).tolist()
    out = np.empty(total)
    v = float(rng.random())
    for i, c in enumerate(power):
        v = (c * v ** (-eta) + 1.0) ** (-1.0 / eta)
        out[i] = v
    return out


def _clayton_exp(total: int, rng: np.random.Generator) -> SimulatedSeries:
    v = clayton_survival_chain(total, CLAYTON_ETA[ModelName.CLAYTON_EXP], rng)
    return SimulatedSeries(-np.log(v))


def _clayton_power(total: int, rng: np.random.Generator) -> SimulatedSeries:
    """Marginal F(x) = 1 - (1 - x)^3 / 9, upper endpoint 1."""
    v = clayton_survival_chain(total, CLAYTON_ETA[ModelName.CLAYTON_POWER], rng)
    return SimulatedSeries(1.0 - np.cbrt(9.0 * v))


def _arma21_t5(total: int, rng: np.random.Generator) -> SimulatedSeries:
    x = rng.standard_t(5, total)
    y = np.asarray(lfilter([1.0, 0.8], [1.0, -0.5, -0.1875], x))
    next_mean = 0.5 * y[-1] + 0.1875 * y[-2] + 0.8 * x[-1]
    return SimulatedSeries(y, innovations=x, next_mean=float(next_mean))


def garch11_innovations(total: int, rng: np.random.Generator) -> NDArray[np.float64]:
    xi = rng.standard_normal(total).tolist()
    out = np.empty(total)
    var = ARCH_OMEGA / (1.0 - GARCH_ALPHA - GARCH_BETA)
    for i, e in enumerate(xi):
        x = math.sqrt(var) * e
        out[i] = x
        var = ARCH_OMEGA + GARCH_ALPHA * x * x + GARCH_BETA * var
    return out


def _ar1_garch11(total: int, rng: np.random.Generator) -> SimulatedSeries:
    x = garch11_innovations(total, rng)
    y = np.asarray(lfilter([1.0], [1.0, -0.8], x))
    return SimulatedSeries(y, innovations=x, next_mean=float(0.8 * y[-1]))


def _iid_exponential(total: int, rng: np.random.Generator) -> SimulatedSeries:
    return SimulatedSeries(rng.standard_exponential(total))


def _iid_frechet(total: int, rng: np.random.Generator) -> SimulatedSeries:
    """Unit Frechet, F(x) = exp(-1/x)."""
    return SimulatedSeries(1.0 / rng.standard_exponential(total))


GENERATORS: dict[ModelName, Generator] = {
    ModelName.AR1_T1: _ar1_t1,
    ModelName.ARMA11_T2: _arma11_t2,
    ModelName.ARCH1: _arch1,
    ModelName.CLAYTON_EXP: _clayton_exp,
    ModelName.CLAYTON_POWER: _clayton_power,
    ModelName.ARMA21_T5: _arma21_t5,
    ModelName.AR1_GARCH11: _ar1_garch11,
    ModelName.IID_EXPONENTIAL: _iid_exponential,
    ModelName.IID_FRECHET: _iid_frechet,
}


def model_stream(seed: int, name: ModelName, *key: int) -> np.random.Generator:
    return stream(seed, list(ModelName).index(name), *key)


def simulate(spec: ModelSpec) -> SimulatedSeries:
    """Generate spec.n observations after discarding spec.burn_in; deterministic in seed."""
    info = model_info(spec.name)
    burn = spec.burn_in if info.recursive else 0
    rng = model_stream(spec.seed, spec.name)
    raw = GENERATORS[spec.name](spec.n + burn, rng)
    values = raw.values[burn:].copy()
    values.setflags(write=False)
    innov = None
    if raw.innovations is not None:
        innov = raw.innovations[burn:].copy()
        innov.setflags(write=False)
    return SimulatedSeries(values=values, innovations=innov, next_mean=raw.next_mean)
