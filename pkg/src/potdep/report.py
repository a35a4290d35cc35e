"""JSON report schema, warning capture and CSV output."""

from __future__ import annotations

import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Literal

import pandas as pd
from pydantic import BaseModel, Field

from potdep import __version__
from potdep.errors import PotError

SCHEMA_VERSION = 1


class ErrorInfo(BaseModel):
    type: str
    code: str
    message: str
    exit_code: int

    @classmethod
    def from_exception(cls, exc: BaseException) -> ErrorInfo:
        if isinstance(exc, PotError):
            return cls(
                type=type(exc).__name__,
                code=exc.code,
                message=str(exc),
                exit_code=exc.exit_code,
            )
        return cls(type=type(exc).__name__, code="internal", message=str(exc), exit_code=5)


class Report(BaseModel):
    schema_version: int = SCHEMA_VERSION
    potdep_version: str = __version__
    mode: str
    status: Literal["ok", "error"] = "ok"
    config: dict[str, Any] = Field(default_factory=dict)
    """Resolved configuration with every default materialized."""
    results: dict[str, Any] = Field(default_factory=dict)
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    warnings: list[str] = Field(default_factory=list)
    timings: dict[str, float] = Field(default_factory=dict)
    error: ErrorInfo | None = None

    @property
    def exit_code(self) -> int:
        return 0 if self.error is None else self.error.exit_code

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")


class WarningCollector(logging.Handler):
    """Keeps the messages of WARNING records emitted under one logger."""

    def __init__(self) -> None:
        super().__init__(level=logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record: logging.LogRecord) -> None:
        if record.levelno > logging.WARNING:
            return
        self.messages.append(f"{record.name}: {record.getMessage()}")

    @contextmanager
    def attached(self, logger_name: str = "potdep") -> Iterator[WarningCollector]:
        target = logging.getLogger(logger_name)
        target.addHandler(self)
        try:
            yield self
        finally:
            target.removeHandler(self)


class Timings:
    """Wall-clock seconds per named stage; all zero in deterministic mode."""

    def __init__(self, deterministic: bool = False) -> None:
        self.deterministic = deterministic
        self.values: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = 0.0 if self.deterministic else time.perf_counter() - start
            self.values[name] = self.values.get(name, 0.0) + elapsed


def write_frame(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
