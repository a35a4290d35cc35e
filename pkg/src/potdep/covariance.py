"""Serial tail-copula estimation and the asymptotic covariance of the GP MLE."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.linalg
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.stats import rankdata

from potdep.errors import ConditioningError, DegenerateSampleError, InvalidArgumentError
from potdep.likelihood import MleFit, fisher_info
from potdep.names import BlockMode

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 64
SPD_FLOOR = 1e-10
"""Eigenvalues below SPD_FLOOR * trace count as non-positive."""


def chebyshev_grid(size: int = DEFAULT_GRID_SIZE) -> NDArray[np.float64]:
    """Points 1 - cos(pi j / 2size), j = 1..size: dense near 0, last point exactly 1."""
    if size < 2:
        raise InvalidArgumentError("grid needs at least two points")
    j = np.arange(1, size + 1, dtype=float)
    grid = 1.0 - np.cos(np.pi * j / (2.0 * size))
    grid[-1] = 1.0
    return grid


def default_gap(m: int) -> int:
    return max(1, math.ceil(m / 10))


@dataclass(frozen=True)
class TailCopulaTable:
    """R_hat(u, 1) on a grid of u in (0, 1]."""

    grid: NDArray[np.float64] = field(repr=False)
    values_r_u1: NDArray[np.float64] = field(repr=False)
    mode: BlockMode
    m: int
    gap: int
    blocks: int

    @property
    def r11(self) -> float:
        return float(self.values_r_u1[-1])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"u": self.grid, "R_u1": self.values_r_u1})

    def to_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False)


def estimate_tail_copula(
    data: ArrayLike,
    k: int,
    m: int,
    mode: BlockMode = BlockMode.SLIDING,
    grid: ArrayLike | None = None,
    gap: int | None = None,
    c_bound: float = 10.0,
) -> TailCopulaTable:
    """Block estimator of R(x, 1) from counts of tail events per window.

    Z_j(x) counts observations in window j whose empirical survival is at most
    x k/n. The estimate is n/(mk) times the sample covariance of Z_j(x) and
    Z_j(1) over the N windows.
    """
    x = np.asarray(data, dtype=float)
    n = x.size
    if not 1 <= k < n:
        raise InvalidArgumentError(f"need 1 <= k < n, got k={k}, n={n}")
    if not 1 <= m <= n / 4:
        raise InvalidArgumentError(f"block length m={m} must lie in [1, n/4] for n={n}")
    if np.ptp(x) == 0.0:
        raise DegenerateSampleError("constant series carries no tail information")

    u = chebyshev_grid() if grid is None else np.asarray(grid, dtype=float)
    if u.ndim != 1 or np.any(np.diff(u) <= 0.0) or u[0] < 0.0 or u[-1] != 1.0:
        raise InvalidArgumentError("grid must be strictly ascending in [0, 1] and end at 1")

    # survival P_n(X >= X_i), ranks averaged over ties
    survival = (n - rankdata(x, method="average") + 1.0) / n
    hits = survival[:, None] <= u[None, :] * (k / n)
    cum = np.vstack([np.zeros((1, u.size)), np.cumsum(hits, axis=0, dtype=float)])

    if mode is BlockMode.SLIDING:
        gap_len = 0
        blocks = n - m - 1
        starts = np.arange(blocks)
    else:
        gap_len = default_gap(m) if gap is None else gap
        if gap_len >= m:
            raise InvalidArgumentError(f"gap l={gap_len} must be smaller than m={m}")
        if m + gap_len >= n:
            raise InvalidArgumentError(f"m + l = {m + gap_len} must be smaller than n={n}")
        blocks = n // (m + gap_len)
        starts = np.arange(blocks) * (m + gap_len)
    if blocks < 2:
        raise InvalidArgumentError(f"only {blocks} block(s) available; reduce m")

    counts = cum[starts + m] - cum[starts]
    centered = counts - counts.mean(axis=0)
    values = (n / (m * k)) * (centered * centered[:, -1:]).mean(axis=0)

    bound = np.minimum(u, 1.0) * c_bound
    if np.any(values > bound):
        logger.warning("Tail-copula estimate exceeds %g * min(u, 1); clipped", c_bound)
    values = np.clip(values, 0.0, bound)
    if values[-1] <= 0.0:
        raise DegenerateSampleError("R_hat(1, 1) is zero; no joint tail events in any window")

    grid_out = u.copy()
    grid_out.setflags(write=False)
    values.setflags(write=False)
    return TailCopulaTable(
        grid=grid_out, values_r_u1=values, mode=mode, m=m, gap=gap_len, blocks=blocks
    )


def r_integral(table: TailCopulaTable) -> float:
    """Integral of R(u, 1)/u over (0, 1], integrand held constant below the first node."""
    positive = table.grid > 0.0
    u = table.grid[positive]
    if u.size < 8:
        raise InvalidArgumentError("r_integral needs at least 8 positive grid points")
    f = table.values_r_u1[positive] / u
    return float(u[0] * f[0] + trapezoid(f, u))


def sigma_matrix(
    gamma: float, r11: float, r_int: float, repair: bool = False
) -> NDArray[np.float64]:
    """Asymptotic covariance of the normalized MLE, given the tail-copula summaries.

    With repair=True a matrix with an eigenvalue below SPD_FLOOR * trace is
    projected back by flooring its eigenvalues.
    """
    if gamma <= -0.5:
        raise InvalidArgumentError(f"sigma_matrix requires gamma > -1/2, got {gamma}")
    if r11 <= 0.0:
        raise InvalidArgumentError(f"sigma_matrix requires r11 > 0, got {r11}")
    g1 = 1.0 + gamma
    g2 = 2.0 + gamma
    s11 = g1 * g1 * r11
    s12 = g1 * g1 * (r_int - g2 / g1 * r11)
    s22 = g1 * g1 * (g2 * g2 / (g1 * g1) * r11 - 2.0 * r_int / g1)
    sigma = np.array([[s11, s12], [s12, s22]])
    sigma = 0.5 * (sigma + sigma.T)

    eig, vec = np.linalg.eigh(sigma)
    trace = float(np.trace(sigma))
    floor = SPD_FLOOR * trace
    if trace > 0.0 and eig[0] > floor:
        return sigma
    if not repair or trace <= 0.0:
        raise ConditioningError(
            "covariance matrix is not positive definite",
            eigenvalues=tuple(float(e) for e in eig),
        )
    logger.warning("Sigma_hat eigenvalues %s floored at %.3g", eig, floor)
    repaired = vec @ np.diag(np.maximum(eig, floor)) @ vec.T
    return 0.5 * (repaired + repaired.T)


def cholesky_adjustment(
    sigma_hat: NDArray[np.float64], info_hat: NDArray[np.float64]
) -> NDArray[np.float64]:
    """C = (I_C Sigma_C^T)^-1 from lower Cholesky factors, so C^-T I^-1 C^-1 = Sigma."""
    try:
        sigma_c = scipy.linalg.cholesky(sigma_hat, lower=True)
        info_c = scipy.linalg.cholesky(info_hat, lower=True)
    except np.linalg.LinAlgError as exc:
        eig = tuple(float(e) for e in np.linalg.eigvalsh(sigma_hat))
        raise ConditioningError(f"Cholesky factorization failed: {exc}", eigenvalues=eig) from exc
    return np.asarray(np.linalg.inv(info_c @ sigma_c.T))


@dataclass(frozen=True)
class SerialCovariance:
    """Covariance of the GP MLE under serial dependence.

    sigma_hat is in normalized scale, omega_hat = A sigma_hat A in data scale with
    A = diag(1, sigma). d_hat maps theta* to theta in the adjusted likelihood.
    """

    sigma_hat: NDArray[np.float64]
    omega_hat: NDArray[np.float64]
    a_hat: NDArray[np.float64]
    c_hat: NDArray[np.float64]
    d_hat: NDArray[np.float64]
    info_hat: NDArray[np.float64]
    r11: float
    r_int: float
    table: TailCopulaTable | None = None

    @classmethod
    def from_sigma(
        cls,
        sigma_hat: NDArray[np.float64],
        scale: float,
        info_hat: NDArray[np.float64],
        r11: float = 1.0,
        r_int: float = 1.0,
        table: TailCopulaTable | None = None,
    ) -> SerialCovariance:
        a_hat = np.diag([1.0, scale])
        omega_hat = a_hat @ sigma_hat @ a_hat
        c_hat = cholesky_adjustment(sigma_hat, info_hat)
        # composing with C^T gives theta* the posterior covariance C^-T I^-1 C^-1 = Sigma
        d_hat = a_hat @ c_hat.T @ np.diag([1.0, 1.0 / scale])
        return cls(
            sigma_hat=sigma_hat,
            omega_hat=omega_hat,
            a_hat=a_hat,
            c_hat=c_hat,
            d_hat=d_hat,
            info_hat=info_hat,
            r11=r11,
            r_int=r_int,
            table=table,
        )

    @classmethod
    def independence(cls, fit: MleFit) -> SerialCovariance:
        """Covariance with R(x, y) = min(x, y)."""
        gamma = fit.params.gamma
        return cls.from_sigma(
            sigma_matrix(gamma, 1.0, 1.0), fit.params.sigma, fisher_info(gamma)
        )


def assemble(
    data: ArrayLike,
    k: int,
    m: int,
    mode: BlockMode,
    fit: MleFit,
    gap: int | None = None,
    grid: ArrayLike | None = None,
    c_bound: float = 10.0,
    spd_repair: bool = True,
) -> SerialCovariance:
    if not fit.converged:
        raise InvalidArgumentError("covariance assembly requires a converged fit")
    table = estimate_tail_copula(data, k, m, mode, grid=grid, gap=gap, c_bound=c_bound)
    r_int = r_integral(table)
    gamma, scale = fit.params.gamma, fit.params.sigma
    sigma_hat = sigma_matrix(gamma, table.r11, r_int, repair=spd_repair)
    logger.debug("R11=%.4f, R_int=%.4f, Sigma_hat=%s", table.r11, r_int, sigma_hat.tolist())
    return SerialCovariance.from_sigma(
        sigma_hat, scale, fisher_info(gamma), r11=table.r11, r_int=r_int, table=table
    )
