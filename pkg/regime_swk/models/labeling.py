"""
From window assignments to per-point regime labels, accuracy and regime statistics.
"""
import itertools
from typing import ClassVar

import numpy as np
from loguru import logger as l
from pydantic import model_validator

from .base import ArrayModelBase, ModelBase
from .exceptions import ContractError, ShapeError, SizeGuardError
from .field_types import MAX_EXHAUSTIVE_LABELS, NonNegativeInt
from .measures import LiftConfig, ReturnSeries

UNLABELED: int = -1
"""Label of a point that no window covers."""

_ZERO_STD_RTOL: float = 1e-15


class LabeledSeries(ArrayModelBase):
    """Per-point labels of a return series after majority voting."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {
        'labels': np.int64,
        'coverage': np.int64,
        'votes_for': np.int64,
        'truth': np.int64,
    }

    labels: np.ndarray
    """Cluster id per point, UNLABELED (-1) where no window covers the point."""
    coverage: np.ndarray
    """Number of windows covering each point."""
    votes_for: np.ndarray
    """Number of covering windows that voted for the chosen label."""
    truth: np.ndarray | None = None
    """Optional ground-truth regime per point."""
    timestamps: tuple[str, ...] | None = None

    @model_validator(mode='after')
    def _check_lengths(self) -> 'LabeledSeries':
        n = self.labels.shape[0]
        for name in ('coverage', 'votes_for', 'truth'):
            array = getattr(self, name)
            if array is not None and array.shape != (n,):
                raise ShapeError(f"{name} has shape {array.shape}, expected ({n},)")
        if self.timestamps is not None and len(self.timestamps) != n:
            raise ShapeError(f"Got {len(self.timestamps)} timestamps for {n} labels")
        return self

    @property
    def length(self) -> int:
        return int(self.labels.shape[0])

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels != UNLABELED

    def with_truth(self, truth: np.ndarray) -> 'LabeledSeries':
        return self.model_copy(update={'truth': np.asarray(truth, dtype=np.int64)})


class RegimeSummary(ModelBase):
    """Descriptive statistics of the raw log returns inside one regime."""
    regime: NonNegativeInt
    count: NonNegativeInt
    mean: list[float] | None = None
    """Per-coordinate mean, None when suppressed."""
    std: list[float] | None = None
    """Per-coordinate population standard deviation, None when suppressed."""
    correlation: list[list[float]] | None = None
    """d×d Pearson correlation matrix, None when suppressed or undefined."""
    suppressed: bool = False
    """Set when the regime has fewer than 2 points."""
    correlation_defined: bool = True
    """False when some coordinate has zero variance inside the regime."""


class RegimeStats(ModelBase):
    regimes: list[RegimeSummary]

    def summary(self, regime: int) -> RegimeSummary:
        for entry in self.regimes:
            if entry.regime == regime:
                return entry
        raise KeyError(regime)


def majority_vote(
    assignments: np.ndarray,
    lift_cfg: LiftConfig,
    series_length: int,
    truth: np.ndarray | None = None,
    timestamps: tuple[str, ...] | None = None,
    n_clusters: int | None = None,
) -> LabeledSeries:
    """
    Label every point with the cluster held by most of the windows covering it.

    Ties go to the label of the previous point when it is among the tied
    clusters, otherwise to the lowest tied cluster id.
    """
    assignments = np.asarray(assignments, dtype=np.int64)
    starts = lift_cfg.window_starts(series_length)
    if starts.shape[0] != assignments.shape[0]:
        raise ShapeError(
            f"{assignments.shape[0]} assignments for {starts.shape[0]} windows "
            f"(h1={lift_cfg.h1}, h2={lift_cfg.h2}, delta={lift_cfg.delta}, N'={series_length})"
        )
    k = n_clusters if n_clusters is not None else int(assignments.max(initial=-1)) + 1
    k = max(k, 1)

    # difference array over time, one column per cluster
    counts = np.zeros((series_length + 1, k), dtype=np.int64)
    np.add.at(counts, (starts, assignments), 1)
    np.add.at(counts, (starts + lift_cfg.h1, assignments), -1)
    counts = np.cumsum(counts, axis=0)[:series_length]

    coverage = counts.sum(axis=1)
    best = counts.max(axis=1)
    labels = counts.argmax(axis=1)
    tied = (counts == best[:, None]).sum(axis=1) > 1
    covered = coverage > 0
    labels[~covered] = UNLABELED

    for t in np.flatnonzero(tied & covered):
        previous = labels[t - 1] if t > 0 else UNLABELED
        if previous != UNLABELED and counts[t, previous] == best[t]:
            labels[t] = previous

    votes_for = np.where(covered, counts[np.arange(series_length), np.maximum(labels, 0)], 0)
    return LabeledSeries(
        labels=labels,
        coverage=coverage,
        votes_for=votes_for,
        truth=truth,
        timestamps=timestamps,
    )


def _require_truth(labeled: LabeledSeries) -> np.ndarray:
    if labeled.truth is None:
        raise ContractError("Ground-truth regimes are required to score a labeling")
    return labeled.truth


def contingency(labeled: LabeledSeries, n_clusters: int | None = None) -> np.ndarray:
    """Cluster × regime counts over the labeled points."""
    truth = _require_truth(labeled)
    mask = labeled.labeled_mask
    labels, regimes = labeled.labels[mask], truth[mask]
    k = n_clusters if n_clusters is not None else int(labels.max(initial=-1)) + 1
    r = int(truth.max(initial=-1)) + 1
    table = np.zeros((max(k, 1), max(r, 1)), dtype=np.int64)
    np.add.at(table, (labels, regimes), 1)
    return table


def map_clusters(labeled: LabeledSeries, n_clusters: int | None = None) -> dict[int, int]:
    """
    Cluster → regime mapping that maximizes the number of correctly labeled points.

    Exhaustive over permutations. With more clusters than regimes every regime
    is matched to a distinct cluster and the remaining clusters map to -1.
    """
    table = contingency(labeled, n_clusters)
    k, r = table.shape
    if max(k, r) > MAX_EXHAUSTIVE_LABELS:
        raise SizeGuardError("Label set", max(k, r), MAX_EXHAUSTIVE_LABELS)

    best_score, best_mapping = -1, {}
    if k <= r:
        for regimes in itertools.permutations(range(r), k):
            score = sum(int(table[c, regimes[c]]) for c in range(k))
            if score > best_score:
                best_score, best_mapping = score, {c: regimes[c] for c in range(k)}
    else:
        for clusters in itertools.permutations(range(k), r):
            score = sum(int(table[clusters[g], g]) for g in range(r))
            if score > best_score:
                mapping = dict.fromkeys(range(k), -1)
                mapping.update({clusters[g]: g for g in range(r)})
                best_score, best_mapping = score, mapping
    return best_mapping


def apply_mapping(labels: np.ndarray, mapping: dict[int, int]) -> np.ndarray:
    """Translate cluster ids to regime ids; unlabeled and unmapped points become -1."""
    size = max([*mapping.keys(), int(labels.max(initial=-1))]) + 1
    lookup = np.full(size + 1, UNLABELED, dtype=np.int64)
    for cluster, regime in mapping.items():
        lookup[cluster] = regime
    # index -1 hits the trailing UNLABELED slot
    return lookup[labels]


def total_accuracy(
    labeled: LabeledSeries,
    partition: np.ndarray | None = None,
    mapping: dict[int, int] | None = None,
) -> float:
    """
    Fraction of labeled points in the partition whose mapped label equals the truth.

    ``partition`` is a boolean mask or an index array; by default all labeled
    points are scored. Returns nan when the partition has no labeled point.
    """
    truth = _require_truth(labeled)
    if mapping is None:
        mapping = map_clusters(labeled)
    mask = labeled.labeled_mask.copy()
    if partition is not None:
        partition = np.asarray(partition)
        if partition.dtype == bool:
            selected = partition
        else:
            selected = np.zeros(labeled.length, dtype=bool)
            selected[partition] = True
        mask &= selected
    if not mask.any():
        return float('nan')
    mapped = apply_mapping(labeled.labels, mapping)
    return float(np.mean(mapped[mask] == truth[mask]))


def per_regime_accuracy(labeled: LabeledSeries, mapping: dict[int, int] | None = None) -> dict[int, float]:
    """Accuracy restricted to the points whose true regime is k, for every regime k."""
    truth = _require_truth(labeled)
    if mapping is None:
        mapping = map_clusters(labeled)
    return {
        int(regime): total_accuracy(labeled, partition=truth == regime, mapping=mapping)
        for regime in np.unique(truth)
    }


def regime_stats(returns: ReturnSeries | np.ndarray, labeled: LabeledSeries) -> RegimeStats:
    """
    Mean, standard deviation and correlation of the raw log returns per labeled regime.

    A ReturnSeries is de-standardized first so that signs and scales are those
    of the original prices.
    """
    raw = returns.raw() if isinstance(returns, ReturnSeries) else np.asarray(returns, dtype=np.float64)
    if raw.ndim == 1:
        raw = raw[:, None]
    if raw.shape[0] != labeled.length:
        raise ShapeError(f"{raw.shape[0]} returns for {labeled.length} labels")

    summaries: list[RegimeSummary] = []
    for regime in np.unique(labeled.labels[labeled.labeled_mask]):
        points = raw[labeled.labels == regime]
        count = int(points.shape[0])
        if count < 2:
            l.warning(f"Regime {regime} has {count} point(s); statistics suppressed")
            summaries.append(RegimeSummary(regime=int(regime), count=count, suppressed=True, correlation_defined=False))
            continue

        mean = points.mean(axis=0)
        std = points.std(axis=0)
        degenerate = std <= _ZERO_STD_RTOL * np.maximum(1.0, np.abs(mean))
        std = np.where(degenerate, 0.0, std)
        correlation = None
        if not degenerate.any():
            matrix = np.atleast_2d(np.corrcoef(points, rowvar=False))
            matrix = np.clip(matrix, -1.0, 1.0)
            np.fill_diagonal(matrix, 1.0)
            correlation = matrix.tolist()
        summaries.append(RegimeSummary(
            regime=int(regime),
            count=count,
            mean=mean.tolist(),
            std=std.tolist(),
            correlation=correlation,
            correlation_defined=correlation is not None,
        ))
    return RegimeStats(regimes=summaries)
