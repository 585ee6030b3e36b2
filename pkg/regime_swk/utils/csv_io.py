"""
CSV codec for prices, truth, labels, diagnostics and sweep tables.

Writers return the CSV text (staged to disk by ``utils.artifacts``); readers
take a path. Floats are written with their shortest round-trip repr and read
back with ``float_precision="round_trip"``, so values survive bit-exactly.
"""
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from regime_swk.models.clustering import RunOutcome
from regime_swk.models.exceptions import DataError, ShapeError
from regime_swk.models.experiment import SweepReport, SweepCell
from regime_swk.models.labeling import LabeledSeries
from regime_swk.models.measures import Stream

TIMESTAMP: str = 'timestamp'
TRUTH_COLUMNS: list[str] = [TIMESTAMP, 'regime']
LABEL_COLUMNS: list[str] = [TIMESTAMP, 'label', 'votes_for', 'votes_total']
DIAGNOSTIC_COLUMNS: list[str] = [
    'run',
    'iteration',
    'mean_sq_point_centroid',
    'mean_centroid_centroid',
    'centroid_shift',
    'assignments_changed',
]
SWEEP_COLUMNS: list[str] = ['h1', 'h2', 'L', 'K', 'n_runs', 'ta_median', 'ta_max', 'ta_metric_selected']


def _to_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator='\n')


def _read(path: Path | str, columns: list[str] | None = None) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype={TIMESTAMP: str}, float_precision='round_trip', encoding='utf-8')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read CSV {path}: {e}") from e
    if columns is not None and list(frame.columns) != columns:
        raise ShapeError(f"{path}: expected header {','.join(columns)}, got {','.join(map(str, frame.columns))}")
    return frame


def _timestamps(timestamps: Sequence[str] | None, n: int, first: int = 0) -> list[str]:
    if timestamps is not None:
        return list(timestamps)
    return [str(i) for i in range(first, first + n)]


# =============================================================================
# Prices and truth
# =============================================================================

def prices_csv(stream: Stream) -> str:
    """``timestamp,c0,...``; integer indices stand in for missing timestamps."""
    frame = pd.DataFrame(stream.values, columns=[f"c{j}" for j in range(stream.dimension)])
    frame.insert(0, TIMESTAMP, _timestamps(stream.timestamps, stream.length))
    return _to_text(frame)


def read_prices(path: Path | str) -> Stream:
    frame = _read(path)
    columns = list(frame.columns)
    expected = [TIMESTAMP, *(f"c{j}" for j in range(len(columns) - 1))]
    if len(columns) < 2 or columns != expected:
        raise ShapeError(f"{path}: prices header must be timestamp,c0,...,c{{d-1}}, got {','.join(map(str, columns))}")
    values = frame[columns[1:]].to_numpy(dtype=np.float64)
    return Stream(values=values, timestamps=tuple(frame[TIMESTAMP]))


def truth_csv(truth: np.ndarray, timestamps: Sequence[str] | None = None) -> str:
    frame = pd.DataFrame({TIMESTAMP: _timestamps(timestamps, len(truth)), 'regime': np.asarray(truth, dtype=np.int64)})
    return _to_text(frame)


def read_truth(path: Path | str) -> tuple[np.ndarray, tuple[str, ...]]:
    """Regime ids and their timestamps."""
    frame = _read(path, TRUTH_COLUMNS)
    return frame['regime'].to_numpy(dtype=np.int64), tuple(frame[TIMESTAMP])


def align_truth(truth: np.ndarray, truth_timestamps: tuple[str, ...], stream: Stream) -> np.ndarray:
    """Truth of every log return, i.e. of price points 1..N-1."""
    if len(truth) != stream.length:
        raise ShapeError(f"Truth has {len(truth)} rows for {stream.length} prices")
    if stream.timestamps is not None and truth_timestamps != stream.timestamps:
        raise ShapeError("Truth timestamps do not match the price timestamps")
    return truth[1:]


# =============================================================================
# Results
# =============================================================================

def labels_csv(labeled: LabeledSeries) -> str:
    """One row per return; timestamps default to the index of the closing price."""
    frame = pd.DataFrame({
        TIMESTAMP: _timestamps(labeled.timestamps, labeled.length, first=1),
        'label': labeled.labels,
        'votes_for': labeled.votes_for,
        'votes_total': labeled.coverage,
    })
    return _to_text(frame)


def read_labels(path: Path | str) -> LabeledSeries:
    frame = _read(path, LABEL_COLUMNS)
    return LabeledSeries(
        labels=frame['label'].to_numpy(dtype=np.int64),
        votes_for=frame['votes_for'].to_numpy(dtype=np.int64),
        coverage=frame['votes_total'].to_numpy(dtype=np.int64),
        timestamps=tuple(frame[TIMESTAMP]),
    )


def diagnostics_frame(outcomes: Sequence[RunOutcome]) -> pd.DataFrame:
    rows = [
        {
            'run': outcome.run,
            'iteration': diag.iteration,
            'mean_sq_point_centroid': diag.mean_sq_point_centroid,
            'mean_centroid_centroid': diag.mean_centroid_centroid,
            'centroid_shift': diag.centroid_shift,
            'assignments_changed': diag.assignments_changed,
        }
        for outcome in outcomes
        for diag in outcome.result.diagnostics
    ]
    return pd.DataFrame(rows, columns=DIAGNOSTIC_COLUMNS)


def diagnostics_csv(outcomes: Sequence[RunOutcome]) -> str:
    return _to_text(diagnostics_frame(outcomes))


def read_diagnostics(path: Path | str) -> pd.DataFrame:
    return _read(path, DIAGNOSTIC_COLUMNS)


def sweep_csv(report: SweepReport) -> str:
    """Failed cells keep their row with empty accuracy columns."""
    frame = pd.DataFrame(
        [cell.model_dump(include=set(SWEEP_COLUMNS)) for cell in report.cells],
        columns=SWEEP_COLUMNS,
    )
    return _to_text(frame)


def read_sweep(path: Path | str) -> list[SweepCell]:
    frame = _read(path, SWEEP_COLUMNS)
    cells = []
    for row in frame.to_dict(orient='records'):
        scores = {name: None if pd.isna(row[name]) else float(row[name]) for name in SWEEP_COLUMNS[5:]}
        cells.append(SweepCell(
            h1=int(row['h1']),
            h2=int(row['h2']),
            L=int(row['L']),
            K=int(row['K']),
            n_runs=int(row['n_runs']),
            failed=scores['ta_median'] is None and int(row['n_runs']) == 0,
            **scores,
        ))
    return cells
