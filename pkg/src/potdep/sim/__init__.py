"""potdep simulation lab."""

from potdep.sim.experiments import (
    CoverageReport,
    CoverageSettings,
    coverage_experiment,
    sigma_experiment,
)
from potdep.sim.models import MODELS, ModelSpec, SimulatedSeries, simulate
from potdep.sim.truths import TrueValues, true_values

__all__ = [
    "MODELS",
    "CoverageReport",
    "CoverageSettings",
    "ModelSpec",
    "SimulatedSeries",
    "TrueValues",
    "coverage_experiment",
    "sigma_experiment",
    "simulate",
    "true_values",
]
