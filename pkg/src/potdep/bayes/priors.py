"""Prior densities on theta* = (gamma*, sigma*)."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from potdep.config import PriorConfig
from potdep.errors import InvalidArgumentError
from potdep.names import GammaPriorKind, PriorPlacement, SigmaPriorKind

LogDensity = Callable[[float, float], float]


@dataclass(frozen=True)
class GammaPrior:
    """Normal truncated to gamma > -1, flat on (-1, gamma_max), or a point mass."""

    kind: GammaPriorKind = GammaPriorKind.NORMAL
    mean: float = 0.0
    sd: float = 0.4
    gamma_max: float = 5.0
    value: float = 0.0

    def __post_init__(self) -> None:
        if self.sd <= 0.0:
            raise InvalidArgumentError("gamma prior sd must be positive")
        if self.kind is GammaPriorKind.FLAT and self.gamma_max <= -1.0:
            raise InvalidArgumentError("flat gamma prior needs gamma_max > -1")
        if self.kind is GammaPriorKind.FIXED and self.value <= -1.0:
            raise InvalidArgumentError("fixed gamma must exceed -1")

    def log_density(self, gamma: float) -> float:
        if gamma <= -1.0:
            return -math.inf
        match self.kind:
            case GammaPriorKind.NORMAL:
                z = (gamma - self.mean) / self.sd
                return -0.5 * z * z
            case GammaPriorKind.FLAT:
                return 0.0 if gamma < self.gamma_max else -math.inf
            case GammaPriorKind.FIXED:
                # the sampler never moves gamma off the point mass
                return 0.0


@dataclass(frozen=True)
class SigmaPrior:
    """Lognormal centered at log sigma_hat, vague 1/sigma on (sigma_hat/c, sigma_hat c), or flat."""

    kind: SigmaPriorKind = SigmaPriorKind.LOGNORMAL
    sd: float = 1.0
    c: float = 10.0

    def __post_init__(self) -> None:
        if self.sd <= 0.0 or self.c <= 1.0:
            raise InvalidArgumentError("sigma prior needs sd > 0 and c > 1")

    def log_density(self, sigma: float, sigma_hat: float) -> float:
        if sigma <= 0.0:
            return -math.inf
        log_sigma = math.log(sigma)
        match self.kind:
            case SigmaPriorKind.LOGNORMAL:
                z = (log_sigma - math.log(sigma_hat)) / self.sd
                return -log_sigma - 0.5 * z * z
            case SigmaPriorKind.VAGUE:
                inside = sigma_hat / self.c < sigma < sigma_hat * self.c
                return -log_sigma if inside else -math.inf
            case SigmaPriorKind.FLAT:
                return 0.0


@dataclass(frozen=True)
class PriorSpec:
    gamma_prior: GammaPrior = field(default_factory=GammaPrior)
    sigma_prior: SigmaPrior = field(default_factory=SigmaPrior)
    placement: PriorPlacement = PriorPlacement.STAR

    @classmethod
    def from_config(cls, cfg: PriorConfig) -> PriorSpec:
        return cls(
            gamma_prior=GammaPrior(
                kind=cfg.gamma,
                mean=cfg.gamma_mean,
                sd=cfg.gamma_sd,
                gamma_max=cfg.gamma_max,
                value=cfg.gamma_value,
            ),
            sigma_prior=SigmaPrior(kind=cfg.sigma, sd=cfg.sigma_sd, c=cfg.sigma_c),
            placement=cfg.placement,
        )

    @classmethod
    def flat(cls) -> PriorSpec:
        return cls(
            gamma_prior=GammaPrior(kind=GammaPriorKind.FLAT, gamma_max=1e6),
            sigma_prior=SigmaPrior(kind=SigmaPriorKind.FLAT),
        )

    @property
    def gamma_fixed(self) -> bool:
        return self.gamma_prior.kind is GammaPriorKind.FIXED

    def bind(
        self,
        theta_hat: NDArray[np.float64],
        d_hat: NDArray[np.float64],
    ) -> LogDensity:
        """Log prior density of theta*, up to a constant.

        With placement 'induced' the density is that of theta mapped through
        theta_hat + d_hat (theta* - theta_hat); the constant |det d_hat| is dropped.
        """
        sigma_hat = float(theta_hat[1])
        gamma_prior, sigma_prior = self.gamma_prior, self.sigma_prior

        def on_theta(gamma: float, sigma: float) -> float:
            lg = gamma_prior.log_density(gamma)
            if lg == -math.inf:
                return lg
            return lg + sigma_prior.log_density(sigma, sigma_hat)

        if self.placement is PriorPlacement.STAR:
            return on_theta

        def induced(gamma_star: float, sigma_star: float) -> float:
            theta = theta_hat + d_hat @ (np.array([gamma_star, sigma_star]) - theta_hat)
            return on_theta(float(theta[0]), float(theta[1]))

        return induced
