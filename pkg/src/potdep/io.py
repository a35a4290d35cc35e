"""CSV ingestion of series and exogenous regressors."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from potdep.errors import DataLoadError
from potdep.names import NaPolicy

logger = logging.getLogger(__name__)

DEFAULT_MIN_ROWS = 10


@dataclass(frozen=True)
class LoadedSeries:
    values: NDArray[np.float64] = field(repr=False)
    column: str
    dropped: int = 0
    """Rows removed under the drop policy."""

    def __len__(self) -> int:
        return int(self.values.size)


def _read_frame(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise DataLoadError(f"input file not found: {path}")
    try:
        return pd.read_csv(
            path, dtype=str, keep_default_na=False, skip_blank_lines=False, encoding="utf-8"
        )
    except UnicodeDecodeError as exc:
        raise DataLoadError(f"{path} is not valid UTF-8") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataLoadError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise DataLoadError(f"{path} is not a readable CSV file: {exc}") from exc


def _select(frame: pd.DataFrame, column: str | int, path: Path) -> str:
    """Resolve a column name or zero-based index ("2" counts as an index)."""
    names = [str(c) for c in frame.columns]
    if isinstance(column, str) and column in names:
        return column
    if isinstance(column, int) or column.isdigit():
        index = int(column)
        if 0 <= index < len(names):
            return names[index]
    raise DataLoadError(f"{path} has no column {column!r}; columns are {names}")


def _numeric(raw: pd.Series) -> pd.Series:
    values = pd.to_numeric(raw.str.strip(), errors="coerce")
    return values.where(np.isfinite(values))


def ingest_csv(
    path: Path | str,
    column: str | int = 0,
    na_policy: NaPolicy | str = NaPolicy.ERROR,
    min_rows: int = DEFAULT_MIN_ROWS,
) -> LoadedSeries:
    """Numeric series from one CSV column, in file order.

    Cells that are blank or fail to parse as a finite number either raise a
    DataLoadError naming the row (policy 'error') or are dropped with a
    warning (policy 'drop').
    """
    path = Path(path)
    policy = NaPolicy(na_policy)
    frame = _read_frame(path)
    name = _select(frame, column, path)
    values = _numeric(frame[name])
    bad = values.isna().to_numpy()
    if bad.all():
        raise DataLoadError(f"column {name!r} of {path} holds no numeric values")

    dropped = int(bad.sum())
    if dropped and policy is NaPolicy.ERROR:
        row = int(np.flatnonzero(bad)[0])
        raise DataLoadError(
            f"{path}: row {row + 1} (line {row + 2}) of column {name!r} is not a number: "
            f"{frame[name].iloc[row]!r}"
        )
    if dropped:
        logger.warning("Dropped %d non-numeric row(s) from column %r of %s", dropped, name, path)

    series = values.to_numpy(dtype=float)[~bad]
    if series.size < min_rows:
        raise DataLoadError(
            f"column {name!r} of {path} has {series.size} numeric row(s), need {min_rows}"
        )
    series.setflags(write=False)
    return LoadedSeries(values=series, column=name, dropped=dropped)


def ingest_matrix(path: Path | str, columns: Sequence[str | int] = ()) -> NDArray[np.float64]:
    """Exogenous regressor matrix (rows = time) from selected columns, all numeric.

    No columns selected means every column of the file.
    """
    path = Path(path)
    frame = _read_frame(path)
    names = [_select(frame, c, path) for c in columns] or [str(c) for c in frame.columns]
    out = np.empty((len(frame), len(names)))
    for j, name in enumerate(names):
        values = _numeric(frame[name])
        bad = values.isna().to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataLoadError(
                f"{path}: row {row + 1} (line {row + 2}) of column {name!r} is not a number"
            )
        out[:, j] = values.to_numpy(dtype=float)
    if out.shape[0] == 0:
        raise DataLoadError(f"{path} has no rows")
    return out
