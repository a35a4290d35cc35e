"""Error hierarchy with stable machine-readable codes and CLI exit codes."""

from __future__ import annotations

from typing import Any


class PotError(Exception):
    """Base class for every error raised by potdep."""

    code: str = "error"
    exit_code: int = 5


class InvalidArgumentError(PotError, ValueError):
    """Raised when an argument violates an operation's precondition."""

    code = "invalid_argument"
    exit_code = 2


class ConfigError(PotError):
    """Raised when a configuration is inconsistent with the loaded data."""

    code = "config_error"
    exit_code = 2


class DataLoadError(PotError):
    """Raised when an input file cannot be turned into a numeric series."""

    code = "data_error"
    exit_code = 3


class DegenerateSampleError(PotError):
    """Raised when a sample carries no information (constant data, equal excesses)."""

    code = "degenerate_sample"
    exit_code = 3


class BoundaryError(PotError):
    """Raised when a derivative is requested at a point on the support boundary."""

    code = "support_boundary"
    exit_code = 3


class NonConvergenceError(PotError):
    """Raised when an iterative procedure exhausts its budget.

    `best` holds the best point found, `diagnostics` any extra context.
    """

    code = "non_convergence"
    exit_code = 4

    def __init__(
        self,
        message: str,
        best: Any = None,
        diagnostics: dict[str, Any] | None = None,
    ) -> None:
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class ConditioningError(PotError):
    """Raised when a matrix that must be positive definite is not."""

    code = "ill_conditioned"
    exit_code = 4

    def __init__(self, message: str, eigenvalues: tuple[float, ...] = ()) -> None:
        super().__init__(message)
        self.eigenvalues = eigenvalues


class InternalError(PotError):
    """Raised when an internal consistency check fails."""

    code = "internal"
    exit_code = 5
