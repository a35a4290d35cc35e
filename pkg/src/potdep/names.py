"""String enums shared by configuration, reports and the estimator registries."""

from __future__ import annotations

from enum import StrEnum


class Mode(StrEnum):
    """Top-level analysis modes."""

    MARGINAL = "marginal"
    DYNAMIC = "dynamic"
    COVERAGE = "coverage"
    SIGMA_EXPERIMENT = "sigma-experiment"
    SIMULATE = "simulate"


class Stage(StrEnum):
    """How far a marginal analysis proceeds."""

    FIT = "fit"
    COVARIANCE = "covariance"
    POSTERIOR = "posterior"
    QUANTILE = "quantile"


class BlockMode(StrEnum):
    SLIDING = "sliding"
    DISJOINT = "disjoint"


class VarianceMethod(StrEnum):
    """Scalar variance of the normalized extreme-quantile estimator."""

    DELTA = "delta"
    INDEPENDENCE = "independence"
    MC = "mc"


class GammaPriorKind(StrEnum):
    NORMAL = "normal"
    FLAT = "flat"
    FIXED = "fixed"


class SigmaPriorKind(StrEnum):
    LOGNORMAL = "lognormal"
    VAGUE = "vague"
    FLAT = "flat"


class PriorPlacement(StrEnum):
    """Whether the prior density is placed on theta* or induced from theta."""

    STAR = "star"
    INDUCED = "induced"


class NaPolicy(StrEnum):
    ERROR = "error"
    DROP = "drop"


class ModelName(StrEnum):
    """Reference generators. Order is part of the RNG stream key; append only."""

    AR1_T1 = "ar1_t1"
    ARMA11_T2 = "arma11_t2"
    ARCH1 = "arch1"
    CLAYTON_EXP = "clayton_exp"
    CLAYTON_POWER = "clayton_power"
    ARMA21_T5 = "arma21_t5"
    AR1_GARCH11 = "ar1_garch11"
    IID_EXPONENTIAL = "iid_exponential"
    IID_FRECHET = "iid_frechet"


class Estimator(StrEnum):
    """Region and interval types compared in coverage runs."""

    BCI = "BCI"
    BACI = "BACI"
    FCI = "FCI"
    BCR = "BCR"
    BACR = "BACR"
    FCR = "FCR"


class Target(StrEnum):
    GAMMA = "gamma"
    SCALE = "scale"
    THETA = "theta"
    QUANTILE = "quantile"
