# app/data_utils.py

"""
Price ingestion and log-return conversion.

Price files are CSV with a header `date,<asset1>,<asset2>,...`, ISO-8601 dates
and plain decimal closes. Several files are merged on the dates they share;
dates with a missing close in any asset are dropped.
"""

import datetime
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from domain.schemas import PriceSeries, ReturnSample
from utils.errors import (
    EmptyIntersectionError,
    NonPositivePriceError,
    ParseError,
    TooFewRowsError,
)
from utils.logging_utils import get_logger

logger = get_logger(__name__)

DATE_COLUMN = "date"
DATE_FORMAT = "%Y-%m-%d"


def _parse_date(cell: str, path: Path, line: int) -> datetime.date:
    try:
        return datetime.datetime.strptime(cell.strip(), DATE_FORMAT).date()
    except ValueError:
        raise ParseError(f"{path}: invalid date {cell!r} at line {line}, column 1",
                         file=str(path), line=line, column=1)


def _parse_close(cell: str, path: Path, line: int, column: int) -> float:
    text = cell.strip()
    if text == "":
        return np.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path}: invalid number {cell!r} at line {line}, column {column}",
                         file=str(path), line=line, column=column)
    if not np.isfinite(value):
        raise ParseError(f"{path}: non-finite close at line {line}, column {column}",
                         file=str(path), line=line, column=column)
    if value <= 0.0:
        raise NonPositivePriceError(f"{path}: close {value:g} at line {line}, column {column} is not positive",
                                    file=str(path), line=line, column=column)
    return value


def read_price_file(path: Union[str, Path]) -> pd.DataFrame:
    """
    Reads one price CSV into a date-indexed frame of closes (NaN for empty cells).

    Raises:
        ParseError: On unreadable files, a bad header, dates or numbers, or duplicate dates.
        NonPositivePriceError: On a close <= 0.
    """
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found", file=str(path), line=0, column=0)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}", file=str(path), line=0, column=0)

    columns = [str(c).strip() for c in raw.columns]
    if len(columns) < 2 or columns[0].lower() != DATE_COLUMN:
        raise ParseError(f"{path}: header must be 'date,<asset>,...'", file=str(path), line=1, column=1)
    assets = columns[1:]

    dates: List[datetime.date] = []
    closes = np.empty((len(raw), len(assets)))
    for row_index, row in enumerate(raw.itertuples(index=False, name=None)):
        line = row_index + 2
        dates.append(_parse_date(row[0], path, line))
        for col_index, cell in enumerate(row[1:]):
            closes[row_index, col_index] = _parse_close(cell, path, line, col_index + 2)

    frame = pd.DataFrame(closes, index=pd.Index(dates, name=DATE_COLUMN), columns=assets)
    duplicated = frame.index.duplicated()
    if duplicated.any():
        line = int(np.flatnonzero(duplicated)[0]) + 2
        raise ParseError(f"{path}: duplicate date at line {line}", file=str(path), line=line, column=1)
    return frame


def load_prices(paths: Union[str, Path, Sequence[Union[str, Path]]]) -> PriceSeries:
    """
    Loads and aligns one or more price files.

    Args:
        paths: One CSV path or several (for example one file per asset).

    Returns:
        PriceSeries: Closes on the common dates, sorted ascending, complete rows only.

    Raises:
        ParseError, NonPositivePriceError: From read_price_file, or duplicate asset names.
        EmptyIntersectionError: If no date survives the alignment.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    frames = [read_price_file(path) for path in paths]
    names = [name for frame in frames for name in frame.columns]
    if len(set(names)) != len(names):
        raise ParseError("the same asset appears in more than one price column", assets=names)

    merged = pd.concat(frames, axis=1, join="inner").sort_index()
    complete = merged.dropna(how="any")
    dropped = len(merged) - len(complete)
    if dropped:
        logger.warning("Dropped %d date(s) with missing closes.", dropped)
    if complete.empty:
        raise EmptyIntersectionError("no date has a close for every asset", files=[str(p) for p in paths])

    return PriceSeries(
        asset_names=[str(name) for name in complete.columns],
        dates=list(complete.index),
        closes=complete.to_numpy(dtype=float),
        dropped_rows=dropped,
    )


def to_log_returns(prices: PriceSeries) -> ReturnSample:
    """
    Converts closes to per-period log returns ln(close_t+1) - ln(close_t).

    Raises:
        TooFewRowsError: If fewer than two price rows are available.
    """
    if len(prices.dates) < 2:
        raise TooFewRowsError(f"need at least 2 price rows, got {len(prices.dates)}",
                              rows=len(prices.dates))
    returns = np.diff(np.log(prices.closes), axis=0)
    return ReturnSample(asset_names=prices.asset_names, returns=returns, dates=prices.dates[1:])


def reconstruct_prices(sample: ReturnSample, initial) -> np.ndarray:
    """Price path implied by the returns, starting from the initial closes."""
    initial = np.asarray(initial, dtype=float).reshape(1, -1)
    growth = np.exp(np.cumsum(sample.returns, axis=0))
    return np.vstack([initial, initial * growth])


def returns_to_frame(sample: ReturnSample) -> pd.DataFrame:
    """Frame with columns `date,r_<asset>...`; samples without dates use period numbers."""
    frame = pd.DataFrame(sample.returns, columns=[f"r_{name}" for name in sample.asset_names])
    if sample.dates is not None:
        labels = [d.isoformat() for d in sample.dates]
    else:
        labels = list(range(1, sample.n_obs + 1))
    frame.insert(0, DATE_COLUMN, labels)
    return frame


def sample_to_prices(
    sample: ReturnSample,
    initial: float = 100.0,
    start: datetime.date = datetime.date(2010, 9, 20),
    step_days: int = 7
) -> PriceSeries:
    """Weekly price series whose log returns are the sample rows."""
    closes = reconstruct_prices(sample, np.full(sample.n_assets, initial))
    dates = [start + datetime.timedelta(days=step_days * i) for i in range(closes.shape[0])]
    return PriceSeries(asset_names=sample.asset_names, dates=dates, closes=closes)


def prices_to_frame(prices: PriceSeries) -> pd.DataFrame:
    """Frame with columns `date,<asset>...` as read by load_prices."""
    frame = pd.DataFrame(prices.closes, columns=prices.asset_names)
    frame.insert(0, DATE_COLUMN, [d.isoformat() for d in prices.dates])
    return frame
