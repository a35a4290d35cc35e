"""potdep Bayesian subsystem."""

from potdep.bayes.posterior import (
    PosteriorDraws,
    QuantilePosterior,
    adjusted_loglik,
    credible_summaries,
    quantile_posterior,
    sample_posterior,
)
from potdep.bayes.priors import GammaPrior, PriorSpec, SigmaPrior
from potdep.bayes.sampler import AdaptiveMetropolis, ChainSettings

__all__ = [
    "AdaptiveMetropolis",
    "ChainSettings",
    "GammaPrior",
    "PosteriorDraws",
    "PriorSpec",
    "QuantilePosterior",
    "SigmaPrior",
    "adjusted_loglik",
    "credible_summaries",
    "quantile_posterior",
    "sample_posterior",
]
