"""True tail parameters and quantiles of the reference models.

Closed forms where the marginal (or innovation) law is known; otherwise a
Monte-Carlo oracle: a GP fit on the top oracle_size * k/n points of one long
sample for a0(n/k), and the empirical (1 - 1/n)-quantile for Q0. Oracle
values are cached in a versioned JSON file.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import t as student_t

from potdep.likelihood import ExceedanceSet, mle_fit
from potdep.names import ModelName
from potdep.paths import truths_path
from potdep.sim.models import (
    GENERATORS,
    MIN_BURN_IN,
    garch11_innovations,
    model_info,
    model_stream,
)

logger = logging.getLogger(__name__)

TRUTHS_VERSION = 1
_ORACLE_STREAM = 0x7A07


class TrueValues(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma0: float
    a0: float
    """Scale a0(n/k) of the GP limit at the ratio k/n."""
    q0: float
    """Marginal (or innovation) quantile at 1 - 1/n."""
    source: str


class TruthTable(BaseModel):
    version: int = TRUTHS_VERSION
    entries: dict[str, TrueValues] = Field(default_factory=dict)


def _key(name: ModelName, n: int, k: int, oracle_size: int) -> str:
    return f"{name}|{n}|{k}|{oracle_size}"


def closed_form_a0(name: ModelName, n: int, k: int) -> float | None:
    match name:
        case ModelName.CLAYTON_EXP | ModelName.IID_EXPONENTIAL:
            return 1.0
        case ModelName.CLAYTON_POWER:
            # excesses over u are GP(-1/3, (1 - u)/3) with 1 - u = (9k/n)^(1/3)
            return float(np.cbrt(9.0 * k / n) / 3.0)
        case _:
            return None


def closed_form_q0(name: ModelName, tau: float) -> float | None:
    match name:
        case ModelName.CLAYTON_EXP | ModelName.IID_EXPONENTIAL:
            return -math.log1p(-tau)
        case ModelName.CLAYTON_POWER:
            return float(1.0 - np.cbrt(9.0 * (1.0 - tau)))
        case ModelName.AR1_T1:
            # sum of 0.8^j-scaled standard Cauchy variables is Cauchy with scale 5
            return 5.0 * math.tan(math.pi * (tau - 0.5))
        case ModelName.ARMA21_T5:
            return float(student_t.ppf(tau, 5))
        case ModelName.IID_FRECHET:
            return -1.0 / math.log(tau)
        case _:
            return None


def oracle_sample(name: ModelName, size: int, seed: int = 0) -> NDArray[np.float64]:
    """One long stationary sample of the target law (innovations for dynamic models)."""
    name = ModelName(name)
    rng = model_stream(seed, name, _ORACLE_STREAM)
    if name is ModelName.AR1_GARCH11:
        return garch11_innovations(size + MIN_BURN_IN, rng)[MIN_BURN_IN:]
    if name is ModelName.ARMA21_T5:
        return rng.standard_t(5, size)
    burn = MIN_BURN_IN if model_info(name).recursive else 0
    return GENERATORS[name](size + burn, rng).values[burn:]


def oracle_values(name: ModelName, n: int, k: int, oracle_size: int, seed: int = 0) -> TrueValues:
    sample = oracle_sample(name, oracle_size, seed)
    k_big = max(int(round(oracle_size * k / n)), 10)
    fit = mle_fit(ExceedanceSet.from_sample(sample, k_big))
    q0 = float(np.quantile(sample, 1.0 - 1.0 / n))
    logger.info(
        "Oracle %s (n=%d, k=%d): a0=%.6g, q0=%.6g from %d points",
        name,
        n,
        k,
        fit.params.sigma,
        q0,
        oracle_size,
    )
    return TrueValues(
        gamma0=model_info(name).gamma0, a0=fit.params.sigma, q0=q0, source="oracle"
    )


def _load(path: Path) -> TruthTable:
    if not path.exists():
        return TruthTable()
    table = TruthTable.model_validate_json(path.read_text(encoding="utf-8"))
    if table.version != TRUTHS_VERSION:
        logger.warning("Ignoring truth cache %s with version %d", path, table.version)
        return TruthTable()
    return table


def true_values(
    name: ModelName,
    n: int,
    k: int,
    oracle_size: int = 10_000_000,
    seed: int = 0,
    cache: Path | None = None,
    refresh: bool = False,
) -> TrueValues:
    """(gamma0, a0(n/k), Q0(1 - 1/n)) for a reference model."""
    name = ModelName(name)
    gamma0 = model_info(name).gamma0
    a0 = closed_form_a0(name, n, k)
    q0 = closed_form_q0(name, 1.0 - 1.0 / n)
    if a0 is not None and q0 is not None:
        return TrueValues(gamma0=gamma0, a0=a0, q0=q0, source="closed_form")

    path = cache or truths_path(TRUTHS_VERSION)
    table = _load(path)
    key = _key(name, n, k, oracle_size)
    if key in table.entries and not refresh:
        return table.entries[key]

    values = oracle_values(name, n, k, oracle_size, seed)
    if q0 is not None:
        values = values.model_copy(update={"q0": q0, "source": "oracle_a0"})
    table.entries[key] = values
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table.model_dump_json(indent=2), encoding="utf-8")
    return values
