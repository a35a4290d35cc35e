"""Adaptive random-walk Metropolis sampler and split-chain R-hat."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from potdep.config import McmcConfig
from potdep.errors import InvalidArgumentError
from potdep.rng import stream

logger = logging.getLogger(__name__)

LogTarget = Callable[[NDArray[np.float64]], float]

_REFRESH_EVERY = 50
_ADAPT_EXPONENT = 0.6
_REGULARIZATION = 1e-10


@dataclass(frozen=True)
class ChainSettings:
    chains: int = 2
    iterations: int = 20_000
    burn_in_fraction: float = 0.5
    target_acceptance: float = 0.234
    adapt_start: int = 200
    rhat_error: float = 1.05
    rhat_clean: float = 1.01
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.chains < 1 or self.iterations < 2:
            raise InvalidArgumentError("need at least one chain and two iterations")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise InvalidArgumentError("burn_in_fraction must lie in [0, 1)")

    @property
    def burn_in(self) -> int:
        return int(self.iterations * self.burn_in_fraction)

    @property
    def kept(self) -> int:
        return self.iterations - self.burn_in

    @classmethod
    def from_config(cls, cfg: McmcConfig, seed: int = 0) -> ChainSettings:
        return cls(
            chains=cfg.chains,
            iterations=cfg.iterations,
            burn_in_fraction=cfg.burn_in_fraction,
            target_acceptance=cfg.target_acceptance,
            adapt_start=cfg.adapt_start,
            rhat_error=cfg.rhat_error,
            rhat_clean=cfg.rhat_clean,
            workers=cfg.workers,
            seed=seed,
        )


@dataclass(frozen=True)
class ChainResult:
    samples: NDArray[np.float64]
    accepted: int
    final_scale: float


@dataclass(frozen=True)
class SamplerResult:
    chains: tuple[NDArray[np.float64], ...]
    acceptance_rate: float
    rhat: float

    @property
    def samples(self) -> NDArray[np.float64]:
        return np.concatenate(self.chains, axis=0)


class AdaptiveMetropolis:
    """Gaussian random-walk Metropolis with Haario-style adaptation.

    - Proposal covariance starts at `initial_cov` times 2.38^2/d.
    - During burn-in the covariance follows the running chain covariance
      (from `adapt_start` on) and a global scale follows a Robbins-Monro
      rule toward the target acceptance rate.
    - Both are frozen after burn-in; kept draws come from a fixed kernel.
    - Coordinates outside `free` never move.

    Usage::

        sampler = AdaptiveMetropolis(log_target, cov0, ChainSettings(seed=7))
        result = sampler.run(x0)
    """

    def __init__(
        self,
        log_target: LogTarget,
        initial_cov: ArrayLike,
        settings: ChainSettings,
        free: Sequence[bool] | None = None,
    ) -> None:
        cov = np.atleast_2d(np.asarray(initial_cov, dtype=float))
        d = cov.shape[0]
        mask = np.ones(d, dtype=bool) if free is None else np.asarray(free, dtype=bool)
        if mask.shape != (d,) or not mask.any():
            raise InvalidArgumentError("free mask must select at least one coordinate")
        self._log_target = log_target
        self._settings = settings
        self._idx = np.flatnonzero(mask)
        self._cov0 = cov[np.ix_(self._idx, self._idx)]
        self._dim = d

    def run(self, x0: ArrayLike) -> SamplerResult:
        """Run all chains from x0; chain c uses the stream (seed, c)."""
        start = np.asarray(x0, dtype=float)
        if start.shape != (self._dim,):
            raise InvalidArgumentError(f"start point must have shape ({self._dim},)")
        if not math.isfinite(self._log_target(start)):
            raise InvalidArgumentError("start point has zero target density")
        s = self._settings
        rngs = [stream(s.seed, c) for c in range(s.chains)]
        with ThreadPoolExecutor(max_workers=s.workers, thread_name_prefix="chain") as pool:
            results = list(pool.map(lambda rng: self.run_chain(start, rng), rngs))
        accepted = sum(r.accepted for r in results)
        rate = accepted / (s.chains * s.kept) if s.kept else 0.0
        chains = tuple(r.samples for r in results)
        return SamplerResult(chains=chains, acceptance_rate=rate, rhat=split_rhat(chains))

    def run_chain(self, x0: NDArray[np.float64], rng: np.random.Generator) -> ChainResult:
        s = self._settings
        idx = self._idx
        d_free = idx.size
        normals = rng.standard_normal((s.iterations, d_free))
        log_u = np.log(rng.random(s.iterations))

        x = x0.copy()
        lp = self._log_target(x)
        log_scale = math.log(2.38**2 / d_free)
        chol = _safe_cholesky(self._cov0)
        mean = x[idx].copy()
        m2 = np.zeros((d_free, d_free))
        count = 1
        samples = np.empty((s.kept, self._dim))
        accepted = 0

        for t in range(s.iterations):
            prop = x.copy()
            prop[idx] += math.exp(0.5 * log_scale) * (chol @ normals[t])
            lp_prop = self._log_target(prop)
            log_alpha = lp_prop - lp if math.isfinite(lp_prop) else -math.inf
            accept = log_u[t] < log_alpha
            if accept:
                x, lp = prop, lp_prop

            if t < s.burn_in:
                count += 1
                delta = x[idx] - mean
                mean += delta / count
                m2 += np.outer(delta, x[idx] - mean)
                rate = math.exp(min(0.0, log_alpha))
                log_scale += (rate - s.target_acceptance) / (t + 1) ** _ADAPT_EXPONENT
                if t + 1 >= s.adapt_start and (t + 1) % _REFRESH_EVERY == 0:
                    emp = m2 / (count - 1)
                    if np.all(np.diag(emp) > 0.0):
                        chol = _safe_cholesky(emp)
            else:
                samples[t - s.burn_in] = x
                accepted += int(accept)

        return ChainResult(samples=samples, accepted=accepted, final_scale=math.exp(log_scale))


def _safe_cholesky(cov: NDArray[np.float64]) -> NDArray[np.float64]:
    ridge = _REGULARIZATION * max(float(np.trace(cov)), 1e-300)
    return np.linalg.cholesky(cov + ridge * np.eye(cov.shape[0]))


def split_rhat(chains: Sequence[NDArray[np.float64]]) -> float:
    """Split-chain potential scale reduction, maximized over coordinates.

    Coordinates with zero within-chain variance are skipped.
    """
    halves: list[NDArray[np.float64]] = []
    for chain in chains:
        c = np.asarray(chain, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        half = c.shape[0] // 2
        if half < 2:
            raise InvalidArgumentError("each chain needs at least four draws for R-hat")
        halves.extend([c[:half], c[-half:]])
    seqs = np.stack(halves)
    length = seqs.shape[1]
    within = seqs.var(axis=1, ddof=1).mean(axis=0)
    between = length * seqs.mean(axis=1).var(axis=0, ddof=1)
    moving = within > 0.0
    if not moving.any():
        return 1.0
    var_hat = (length - 1) / length * within[moving] + between[moving] / length
    return float(np.sqrt(var_hat / within[moving]).max())
