"""
Price streams, standardized log returns and the sliding-window lift.

A stream of prices is turned into coordinate-wise standardized log returns,
which are then cut into overlapping windows; every window is an empirical
measure with ``h1`` equally weighted atoms.
"""
from collections.abc import Iterator
from typing import ClassVar

import numpy as np
import pandas as pd
from loguru import logger as l
from pydantic import model_validator

from .base import ArrayModelBase, ModelBase
from .exceptions import DegenerateInputError, DomainError, InsufficientDataError, ShapeError
from .field_types import NonNegativeInt, PositiveInt

_ZERO_VARIANCE_RTOL: float = 1e-12


def _check_increasing(timestamps: tuple[str, ...]) -> None:
    """Timestamps are either all integer indices or all ISO-8601 strings."""
    try:
        keys = np.array([int(t) for t in timestamps], dtype=np.int64)
    except ValueError:
        keys = pd.to_datetime(pd.Series(timestamps), format='ISO8601').to_numpy()
    if len(keys) > 1 and not np.all(keys[1:] > keys[:-1]):
        raise ShapeError("Timestamps must be strictly increasing")


class Stream(ArrayModelBase):
    """A raw N×d price path with optional timestamps."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'values': np.float64}

    values: np.ndarray
    """N×d matrix of strictly positive prices."""
    timestamps: tuple[str, ...] | None = None
    """Optional length-N strictly increasing timestamps (ISO-8601 or integer index)."""

    @model_validator(mode='before')
    @classmethod
    def _promote_1d(cls, values: dict) -> dict:
        if isinstance(values, dict) and values.get('values') is not None:
            array = np.asarray(values['values'], dtype=np.float64)
            if array.ndim == 1:
                values = {**values, 'values': array[:, None]}
        return values

    @model_validator(mode='after')
    def _validate_stream(self) -> 'Stream':
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ShapeError(f"Prices must be an N×d matrix, got shape {self.values.shape}")
        if self.values.shape[0] < 2:
            raise InsufficientDataError(f"A stream needs at least 2 prices, got {self.values.shape[0]}")
        bad = np.argwhere(~(self.values > 0))
        if len(bad):
            row, column = (int(i) for i in bad[0])
            raise DomainError(row, column, float(self.values[row, column]))
        if self.timestamps is not None:
            if len(self.timestamps) != self.values.shape[0]:
                raise ShapeError(
                    f"Got {len(self.timestamps)} timestamps for {self.values.shape[0]} prices"
                )
            _check_increasing(self.timestamps)
        return self

    @property
    def length(self) -> int:
        return int(self.values.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])


class ReturnSeries(ArrayModelBase):
    """Standardized log returns together with the constants used to standardize them."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {
        'values': np.float64,
        'mean_used': np.float64,
        'std_used': np.float64,
    }

    values: np.ndarray
    """(N-1)×d standardized log returns."""
    mean_used: np.ndarray
    """Per-coordinate mean subtracted during standardization."""
    std_used: np.ndarray
    """Per-coordinate population standard deviation divided out."""
    timestamps: tuple[str, ...] | None = None
    """Timestamp of the closing price of each return, when the stream had timestamps."""

    @property
    def length(self) -> int:
        return int(self.values.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.values.shape[1])

    def raw(self) -> np.ndarray:
        """Undo the standardization and return the raw log returns."""
        return self.values * self.std_used + self.mean_used


class LiftConfig(ModelBase):
    """Parameters of the sliding-window lift."""
    h1: PositiveInt
    """Window size (number of return points per window)."""
    h2: PositiveInt
    """Offset between consecutive window starts."""
    delta: NonNegativeInt = 0
    """Random offset of the first window, 0 ≤ delta ≤ h2 - 1."""

    @model_validator(mode='after')
    def _check_sizes(self) -> 'LiftConfig':
        if self.h2 > self.h1:
            raise ValueError(f"h2 ({self.h2}) must not exceed h1 ({self.h1})")
        if self.delta > self.h2 - 1:
            raise ValueError(f"delta ({self.delta}) must lie in [0, h2 - 1] = [0, {self.h2 - 1}]")
        return self

    def window_count(self, series_length: int) -> int:
        """Number of windows that fit entirely inside a series of the given length."""
        if series_length < self.h1 + self.delta:
            return 0
        return (series_length - self.delta - self.h1) // self.h2 + 1

    def window_starts(self, series_length: int) -> np.ndarray:
        return self.delta + self.h2 * np.arange(self.window_count(series_length), dtype=np.int64)


class EmpiricalMeasure(ArrayModelBase):
    """One window of the lift: h1 equally weighted d-dimensional atoms."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'atoms': np.float64}

    atoms: np.ndarray
    """h1×d matrix of atoms."""
    window_index: NonNegativeInt
    """Position of the window in its family (0-based)."""
    start_index: NonNegativeInt
    """Index of the first atom in the return series."""

    @property
    def dimension(self) -> int:
        return int(self.atoms.shape[1])


class MeasureFamily(ArrayModelBase):
    """
    The family of empirical measures produced by one lift.

    Atoms of all windows are stored as a single M×h1×d array; indexing the
    family yields individual EmpiricalMeasure views.
    """
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'atoms': np.float64, 'starts': np.int64}

    atoms: np.ndarray
    """M×h1×d atoms of every window."""
    starts: np.ndarray
    """Start index of every window in the return series."""
    lift: LiftConfig
    series_length: PositiveInt
    """Length of the return series the family was cut from."""

    def __len__(self) -> int:
        return int(self.atoms.shape[0])

    def __getitem__(self, m: int) -> EmpiricalMeasure:
        return EmpiricalMeasure(atoms=self.atoms[m], window_index=m, start_index=int(self.starts[m]))

    def __iter__(self) -> Iterator[EmpiricalMeasure]:  # type: ignore[override]
        for m in range(len(self)):
            yield self[m]

    @property
    def dimension(self) -> int:
        return int(self.atoms.shape[2])


def log_returns(stream: Stream) -> ReturnSeries:
    """Coordinate-wise standardized log returns (population variance convention)."""
    raw = np.diff(np.log(stream.values), axis=0)
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    for j in range(raw.shape[1]):
        if std[j] <= _ZERO_VARIANCE_RTOL * max(1.0, abs(float(mean[j]))):
            raise DegenerateInputError(j)
    timestamps = stream.timestamps[1:] if stream.timestamps is not None else None
    return ReturnSeries(values=(raw - mean) / std, mean_used=mean, std_used=std, timestamps=timestamps)


def lift(returns: ReturnSeries, cfg: LiftConfig) -> MeasureFamily:
    """Cut the return series into windows of h1 points starting every h2 points after delta."""
    n = returns.length
    if n < cfg.h1 + cfg.delta:
        raise InsufficientDataError(
            f"Return series of length {n} is shorter than h1 + delta = {cfg.h1} + {cfg.delta}"
        )
    starts = cfg.window_starts(n)
    # (n - h1 + 1, d, h1) view; pick the window starts and reorder to (M, h1, d)
    windows = np.lib.stride_tricks.sliding_window_view(returns.values, cfg.h1, axis=0)
    atoms = np.ascontiguousarray(windows[starts].transpose(0, 2, 1))
    l.debug(f"Lifted {n} returns into {len(starts)} windows (h1={cfg.h1}, h2={cfg.h2}, delta={cfg.delta})")
    return MeasureFamily(atoms=atoms, starts=starts, lift=cfg, series_length=n)


def closed_form_window_count(series_length: int, h1: int, h2: int) -> int:
    """floor((N' - (h1 - h2)) / h2), the window count for delta = 0."""
    return (series_length - (h1 - h2)) // h2
