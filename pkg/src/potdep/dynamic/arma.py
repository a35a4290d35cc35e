"""ARMA/ARMAX conditional least squares and forecasts.

The model is written in deviation form around the mean mu::

    w_i = Y_i - mu
    w_i = sum_j phi_j w_(i-j) + beta' Z_i + sum_j psi_j X_(i-j) + X_i

Innovations before index p are set to zero, so the recursion starts with
zero auxiliary residuals.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import least_squares, minimize
from scipy.signal import lfilter

from potdep.config import DynamicConfig
from potdep.errors import InvalidArgumentError, NonConvergenceError

logger = logging.getLogger(__name__)

_CONTRACTIONS = 3


@dataclass(frozen=True)
class ArmaSpec:
    p: int = 1
    q: int = 0
    include_mean: bool = True
    exog_dim: int = 0

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0 or self.exog_dim < 0:
            raise InvalidArgumentError("ARMA orders and exog_dim must be non-negative")
        if self.p + self.q < 1:
            raise InvalidArgumentError("ARMA spec needs p + q >= 1")

    @property
    def n_params(self) -> int:
        return self.p + self.q + self.exog_dim + int(self.include_mean)

    @property
    def lags(self) -> int:
        return max(self.p, self.q)

    @classmethod
    def from_config(cls, cfg: DynamicConfig, exog_dim: int = 0) -> ArmaSpec:
        return cls(p=cfg.p, q=cfg.q, include_mean=cfg.include_mean, exog_dim=exog_dim)


@dataclass(frozen=True)
class ArmaCoefficients:
    phi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    psi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    beta: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    mean: float = 0.0

    @classmethod
    def from_vector(cls, spec: ArmaSpec, v: ArrayLike) -> ArmaCoefficients:
        x = np.asarray(v, dtype=float)
        if x.shape != (spec.n_params,):
            raise InvalidArgumentError(f"expected {spec.n_params} coefficients, got {x.shape}")
        i = 0
        mean = 0.0
        if spec.include_mean:
            mean, i = float(x[0]), 1
        phi = x[i : i + spec.p]
        psi = x[i + spec.p : i + spec.p + spec.q]
        beta = x[i + spec.p + spec.q :]
        return cls(phi=phi.copy(), psi=psi.copy(), beta=beta.copy(), mean=mean)

    def as_vector(self, spec: ArmaSpec) -> NDArray[np.float64]:
        head = [self.mean] if spec.include_mean else []
        return np.concatenate([head, self.phi, self.psi, self.beta])

    def check(self, spec: ArmaSpec) -> None:
        if (self.phi.size, self.psi.size, self.beta.size) != (spec.p, spec.q, spec.exog_dim):
            raise InvalidArgumentError("coefficient sizes do not match the ARMA spec")
        if not spec.include_mean and self.mean != 0.0:
            raise InvalidArgumentError("spec excludes a mean but coefficients carry one")

    def to_dict(self) -> dict[str, object]:
        return {
            "phi": self.phi.tolist(),
            "psi": self.psi.tolist(),
            "beta": self.beta.tolist(),
            "mean": self.mean,
        }


@dataclass(frozen=True)
class ArmaFit:
    coefficients: ArmaCoefficients
    innovations: NDArray[np.float64] = field(repr=False)
    sse: float
    method: str


def ma_invertible(psi: NDArray[np.float64]) -> bool:
    """True when 1 + sum psi_j z^j has no root in the closed unit disk."""
    if psi.size == 0 or not np.any(psi):
        return True
    roots = np.roots(np.concatenate([psi[::-1], [1.0]]))
    return bool(np.all(np.abs(roots) > 1.0))


def _as_exog(exog: ArrayLike | None, spec: ArmaSpec, rows: int) -> NDArray[np.float64] | None:
    if spec.exog_dim == 0:
        if exog is not None and np.asarray(exog).size:
            raise InvalidArgumentError("exog given but spec.exog_dim is 0")
        return None
    if exog is None:
        raise InvalidArgumentError(f"spec expects {spec.exog_dim} exogenous column(s)")
    z = np.asarray(exog, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[1] != spec.exog_dim:
        raise InvalidArgumentError(
            f"exog has {z.shape[1]} column(s), spec expects {spec.exog_dim}"
        )
    if z.shape[0] < rows:
        raise InvalidArgumentError(f"exog has {z.shape[0]} row(s), need at least {rows}")
    return z


def innovations(
    y: ArrayLike,
    spec: ArmaSpec,
    coef: ArmaCoefficients,
    exog: ArrayLike | None = None,
) -> NDArray[np.float64]:
    """One-step innovations X_i under fixed coefficients; zero for i < p."""
    coef.check(spec)
    yy = np.asarray(y, dtype=float)
    z = _as_exog(exog, spec, yy.size)
    return _innovations(yy, spec, coef, z)


def _innovations(
    y: NDArray[np.float64],
    spec: ArmaSpec,
    coef: ArmaCoefficients,
    z: NDArray[np.float64] | None,
) -> NDArray[np.float64]:
    n = y.size
    w = y - coef.mean
    a = w.copy()
    for j, phi in enumerate(coef.phi, start=1):
        a[j:] -= phi * w[:-j]
    if z is not None:
        a -= z[:n] @ coef.beta
    a[: spec.p] = 0.0
    if spec.q == 0:
        return a
    return np.asarray(lfilter([1.0], np.concatenate([[1.0], coef.psi]), a))


def _ols(
    y: NDArray[np.float64],
    p: int,
    include_mean: bool,
    z: NDArray[np.float64] | None,
    q: int = 0,
) -> ArmaCoefficients:
    """Least squares of Y_i on (1, Y_(i-1..i-p), Z_i); exact conditional LS when q = 0.

    The intercept c maps to the mean through c = mu (1 - sum phi).
    """
    n = y.size
    cols: list[NDArray[np.float64]] = []
    if include_mean:
        cols.append(np.ones(n - p))
    cols.extend(y[p - j : n - j] for j in range(1, p + 1))
    if z is not None:
        cols.extend(z[p:n, c] for c in range(z.shape[1]))
    if not cols:
        return ArmaCoefficients(psi=np.zeros(q))
    sol, *_ = np.linalg.lstsq(np.column_stack(cols), y[p:], rcond=None)
    i = int(include_mean)
    phi = sol[i : i + p]
    beta = sol[i + p :]
    mean = 0.0
    if include_mean:
        persistence = 1.0 - float(phi.sum())
        if abs(persistence) < 1e-8:
            raise NonConvergenceError("AR polynomial has a unit root; the mean is undefined")
        mean = float(sol[0]) / persistence
    return ArmaCoefficients(phi=phi, psi=np.zeros(q), beta=beta, mean=mean)


def arma_cls_fit(
    y: ArrayLike, spec: ArmaSpec, exog: ArrayLike | None = None
) -> ArmaFit:
    """Conditional least squares for ARMA(p, q) with optional exogenous regressors.

    q = 0 reduces to ordinary least squares on lagged values. Otherwise a
    Levenberg-Marquardt search starts from the AR fit; a result outside
    the invertible MA region triggers restarts from contracted MA coefficients
    and finally a simplex search on the constrained sum of squares.
    """
    yy = np.asarray(y, dtype=float)
    if yy.ndim != 1 or not np.all(np.isfinite(yy)):
        raise InvalidArgumentError("series must be one-dimensional and finite")
    n_bar = yy.size
    if n_bar <= 10 * (spec.p + spec.q + 1 + spec.exog_dim):
        raise InvalidArgumentError(
            f"series of length {n_bar} is too short for ARMA({spec.p},{spec.q})"
            f" with {spec.exog_dim} regressor(s)"
        )
    z = _as_exog(exog, spec, n_bar)

    if spec.q == 0:
        coef = _ols(yy, spec.p, spec.include_mean, z)
        e = _innovations(yy, spec, coef, z)
        return ArmaFit(coef, e, float(e @ e), "ols")

    start = _ols(yy, spec.p, spec.include_mean, z, q=spec.q)
    v0 = ArmaCoefficients(
        phi=start.phi, psi=np.full(spec.q, 0.1), beta=start.beta, mean=start.mean
    ).as_vector(spec)

    def resid(v: NDArray[np.float64]) -> NDArray[np.float64]:
        coef = ArmaCoefficients.from_vector(spec, v)
        with np.errstate(over="ignore", invalid="ignore"):
            return _innovations(yy, spec, coef, z)[spec.p :]

    def sse(v: NDArray[np.float64]) -> float:
        coef = ArmaCoefficients.from_vector(spec, v)
        if not ma_invertible(coef.psi):
            return math.inf
        e = resid(v)
        value = float(e @ e)
        return value if math.isfinite(value) else math.inf

    ma = slice(spec.p + int(spec.include_mean), spec.p + int(spec.include_mean) + spec.q)
    for attempt in range(_CONTRACTIONS + 1):
        try:
            res = least_squares(resid, v0, method="lm")
        except ValueError as exc:
            logger.debug("least squares attempt %d failed: %s", attempt, exc)
        else:
            coef = ArmaCoefficients.from_vector(spec, res.x)
            if np.all(np.isfinite(res.x)) and ma_invertible(coef.psi):
                e = _innovations(yy, spec, coef, z)
                return ArmaFit(coef, e, float(e @ e), "least_squares")
            logger.debug("MA part left the invertible region, contracting (attempt %d)", attempt)
        v0 = v0.copy()
        v0[ma] *= 0.5

    res = minimize(sse, v0, method="Nelder-Mead", options={"maxiter": 4000, "xatol": 1e-10})
    if not math.isfinite(float(res.fun)):
        raise NonConvergenceError(
            "CLS fit stayed outside the invertible MA region", best=None
        )
    logger.warning("CLS fell back to a simplex search (sse=%.6g)", float(res.fun))
    coef = ArmaCoefficients.from_vector(spec, res.x)
    e = _innovations(yy, spec, coef, z)
    return ArmaFit(coef, e, float(e @ e), "nelder_mead")


def forecast_paths(
    y: NDArray[np.float64],
    e: NDArray[np.float64],
    coef: ArmaCoefficients,
    origins: NDArray[np.int_],
    horizon: int,
    exog: NDArray[np.float64] | None = None,
) -> NDArray[np.float64]:
    """Forecasts of Y_(o+1..o+h) from each origin o, shape (len(origins), h).

    Future observations are replaced by their forecasts and future innovations
    by zero, so step h builds on the (h-1)-step forecasts.
    """
    if horizon < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    o = np.asarray(origins, dtype=int)
    lags = max(coef.phi.size, coef.psi.size)
    if o.size and int(o.min()) + 1 - lags < 0:
        raise InvalidArgumentError("forecast origin precedes the first usable lag")
    if exog is not None and o.size and int(o.max()) + horizon >= exog.shape[0]:
        raise InvalidArgumentError("exog does not cover the forecast horizon")
    w = y - coef.mean
    out = np.empty((o.size, horizon))
    for h in range(1, horizon + 1):
        acc = exog[o + h] @ coef.beta if exog is not None else np.zeros(o.size)
        for j, phi in enumerate(coef.phi, start=1):
            step = h - j
            acc = acc + phi * (out[:, step - 1] if step >= 1 else w[o + step])
        for j, psi in enumerate(coef.psi, start=1):
            step = h - j
            if step <= 0:
                acc = acc + psi * e[o + step]
        out[:, h - 1] = acc
    return out + coef.mean
