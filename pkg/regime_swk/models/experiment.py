"""
Experiment configuration and the runners behind the ``cluster`` and ``sweep``
commands: resolve window offsets, run the multi-run driver per cell and
aggregate total accuracy.
"""
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import anyio
import numpy as np
from loguru import logger as l
from pydantic import Field, ValidationError, model_validator

from regime_swk import meta_config

from .base import ModelBase
from .clustering import ClusterConfig, RunOutcome, first_error, multi_run_async, select_best
from .exceptions import ConfigError, ContractError, RegimeSwkError
from .field_types import PositiveFloat, PositiveInt, Seed, WassersteinOrder
from .labeling import RegimeStats, per_regime_accuracy, regime_stats
from .measures import LiftConfig, ReturnSeries
from .wasserstein import ProjectionScheme, ProjectionSet, make_projection_set


class H2Rule(ModelBase):
    """Window offset as an absolute count or as a percentage of the window size."""
    value: PositiveFloat
    percent: bool = False

    @model_validator(mode='after')
    def _check_absolute(self) -> 'H2Rule':
        if not self.percent and not float(self.value).is_integer():
            raise ConfigError(f"An absolute h2 must be an integer, got {self.value}")
        return self

    @classmethod
    def parse(cls, text: str | int) -> 'H2Rule':
        """``"20%"`` is a percentage of h1, ``"7"`` an absolute offset."""
        raw = str(text).strip()
        percent = raw.endswith('%')
        try:
            value = float(raw.rstrip('%'))
        except ValueError as e:
            raise ConfigError(f"Cannot parse h2 value {raw!r}") from e
        if value <= 0:
            raise ConfigError(f"h2 must be positive, got {raw!r}")
        return cls(value=value, percent=percent)

    def resolve(self, h1: int) -> int:
        """Percentages round half up and never go below 1."""
        if self.percent:
            scaled = Decimal(repr(self.value)) * h1 / Decimal(100)
            h2 = max(1, int(scaled.quantize(Decimal(1), rounding=ROUND_HALF_UP)))
        else:
            h2 = int(self.value)
        if not 1 <= h2 <= h1:
            raise ConfigError(f"h2 = {h2} (from {self}) must satisfy 1 ≤ h2 ≤ h1 = {h1}")
        return h2

    def __str__(self) -> str:
        number = f"{self.value:g}"
        return f"{number}%" if self.percent else number


class CellConfig(ModelBase):
    """One resolved (h1, h2, L) point of a sweep."""
    h1: PositiveInt
    h2: PositiveInt
    L: PositiveInt
    h2_rule: str
    """The rule h2 was resolved from, as given on the command line."""


class ExperimentConfig(ModelBase):
    """Everything needed to reproduce a cluster or sweep invocation."""
    data: Path
    """Prices CSV."""
    truth: Path | None = None
    """Optional truth CSV aligned with the prices."""
    h1_list: list[PositiveInt] = Field(min_length=1)
    h2_rules: list[H2Rule] = Field(min_length=1)
    L_list: list[PositiveInt] = Field(default_factory=lambda: [1], min_length=1)
    """Projection counts; the commands only fall back to 1 for univariate data."""
    K: PositiveInt = 2
    p: WassersteinOrder = 1
    n_runs: PositiveInt = Field(default_factory=lambda: meta_config.DEFAULT_RUNS)
    seed: Seed = 0
    """Master seed; every run derives its own (seed, delta) from it."""
    out: Path
    scheme: ProjectionScheme = ProjectionScheme.GRID
    directions: Path | None = None
    """JSON file with an L×d list of unit directions for the custom scheme."""
    track_accuracy: bool = False
    """Record total accuracy after every iteration (needs truth)."""
    epsilon: PositiveFloat = Field(default_factory=lambda: meta_config.EPSILON)
    max_iterations: PositiveInt = Field(default_factory=lambda: meta_config.MAX_ITERATIONS)

    @model_validator(mode='after')
    def _check_scheme(self) -> 'ExperimentConfig':
        if self.scheme == ProjectionScheme.CUSTOM and self.directions is None:
            raise ConfigError("--scheme custom needs --directions")
        if self.track_accuracy and self.truth is None:
            raise ConfigError("Tracking accuracy per iteration needs --truth")
        return self

    def cells(self) -> list[CellConfig]:
        """Every (h1, h2, L) combination in h1-major order, with h2 resolved."""
        return [
            CellConfig(h1=h1, h2=rule.resolve(h1), L=L, h2_rule=str(rule))
            for h1 in self.h1_list
            for rule in self.h2_rules
            for L in self.L_list
        ]

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(
            K=self.K,
            p=self.p,
            epsilon=self.epsilon,
            max_iterations=self.max_iterations,
            seed=self.seed,
        )

    def projection_set(self, d: int, L: int, directions: np.ndarray | None = None) -> ProjectionSet:
        return make_projection_set(d, L, self.scheme, directions)


# =============================================================================
# Single configuration (cluster command)
# =============================================================================

class AccuracyReport(ModelBase):
    """Accuracy of the selected run and of the run population."""
    selected_run: int
    selected: float
    per_regime: dict[int, float]
    mapping: dict[int, int]
    median: float
    maximum: float
    n_runs: PositiveInt


class ClusterReport(ModelBase):
    """Outcome of the cluster command."""
    cell: CellConfig
    outcomes: list[RunOutcome]
    selected: RunOutcome
    stats: RegimeStats
    accuracy: AccuracyReport | None = None


def _accuracies(outcomes: list[RunOutcome]) -> np.ndarray:
    return np.array([o.accuracy for o in outcomes if o.accuracy is not None and not np.isnan(o.accuracy)])


async def run_cluster_async(
    config: ExperimentConfig,
    returns: ReturnSeries,
    truth: np.ndarray | None = None,
    directions: np.ndarray | None = None,
    limiter: anyio.CapacityLimiter | None = None,
) -> ClusterReport:
    """Multi-run clustering of one configuration, selection and regime statistics."""
    cell = config.cells()[0]
    outcomes = await multi_run_async(
        returns,
        LiftConfig(h1=cell.h1, h2=cell.h2),
        config.cluster_config(),
        config.projection_set(returns.dimension, cell.L, directions),
        config.n_runs,
        truth=truth,
        master_seed=config.seed,
        track_accuracy=config.track_accuracy,
        limiter=limiter,
    )
    selected = select_best(outcomes)
    stats = regime_stats(returns, selected.labeled)

    accuracy = None
    if truth is not None and selected.accuracy is not None and selected.mapping is not None:
        scores = _accuracies(outcomes)
        accuracy = AccuracyReport(
            selected_run=selected.run,
            selected=selected.accuracy,
            per_regime=per_regime_accuracy(selected.labeled, selected.mapping),
            mapping=selected.mapping,
            median=float(np.median(scores)),
            maximum=float(scores.max()),
            n_runs=len(outcomes),
        )
        l.success(f"Selected run {selected.run}: TA={selected.accuracy:.4f} (median {accuracy.median:.4f}, max {accuracy.maximum:.4f})")
    else:
        l.success(f"Selected run {selected.run}")
    return ClusterReport(cell=cell, outcomes=outcomes, selected=selected, stats=stats, accuracy=accuracy)


# =============================================================================
# Sweep
# =============================================================================

class SweepCell(ModelBase):
    """Total-accuracy statistics of one (h1, h2, L) cell."""
    h1: PositiveInt
    h2: PositiveInt
    L: PositiveInt
    K: PositiveInt
    n_runs: int = Field(ge=0)
    ta_median: float | None = None
    ta_max: float | None = None
    ta_metric_selected: float | None = None
    """TA of the run with the largest final mean centroid-centroid distance."""
    failed: bool = False
    error: str | None = None

    @model_validator(mode='after')
    def _check_order(self) -> 'SweepCell':
        if self.ta_max is not None:
            if self.ta_median is not None and self.ta_median > self.ta_max:
                raise ValueError("ta_median must not exceed ta_max")
            if self.ta_metric_selected is not None and self.ta_metric_selected > self.ta_max:
                raise ValueError("ta_metric_selected must not exceed ta_max")
        return self


class SweepReport(ModelBase):
    cells: list[SweepCell]
    seeds: dict[str, list[tuple[int, int]]] = {}
    """Per-cell (seed, delta) of every run, keyed ``h1/h2/L``."""

    @property
    def failed(self) -> list[SweepCell]:
        return [cell for cell in self.cells if cell.failed]

    def cell(self, h1: int, h2: int, L: int) -> SweepCell:
        for entry in self.cells:
            if (entry.h1, entry.h2, entry.L) == (h1, h2, L):
                return entry
        raise KeyError((h1, h2, L))


def cell_key(cell: CellConfig | SweepCell) -> str:
    return f"{cell.h1}/{cell.h2}/{cell.L}"


async def run_cell_async(
    config: ExperimentConfig,
    cell: CellConfig,
    returns: ReturnSeries,
    truth: np.ndarray,
    directions: np.ndarray | None = None,
    limiter: anyio.CapacityLimiter | None = None,
) -> tuple[SweepCell, list[RunOutcome]]:
    """Run one cell; any error is recorded in the cell instead of raised."""
    try:
        outcomes = await multi_run_async(
            returns,
            LiftConfig(h1=cell.h1, h2=cell.h2),
            config.cluster_config(),
            config.projection_set(returns.dimension, cell.L, directions),
            config.n_runs,
            truth=truth,
            master_seed=config.seed,
            limiter=limiter,
        )
    except (RegimeSwkError, ValidationError) as e:
        message = e.message if isinstance(e, RegimeSwkError) else str(e)
        l.warning(f"Cell h1={cell.h1}, h2={cell.h2}, L={cell.L} failed: {message}")
        return SweepCell(h1=cell.h1, h2=cell.h2, L=cell.L, K=config.K, n_runs=0, failed=True, error=message), []
    except Exception as e:
        message = f"{type(e).__name__}: {e}"
        l.exception(f"Cell h1={cell.h1}, h2={cell.h2}, L={cell.L} failed unexpectedly: {message}")
        return SweepCell(h1=cell.h1, h2=cell.h2, L=cell.L, K=config.K, n_runs=0, failed=True, error=message), []

    scores = _accuracies(outcomes)
    selected = select_best(outcomes)
    result = SweepCell(
        h1=cell.h1,
        h2=cell.h2,
        L=cell.L,
        K=config.K,
        n_runs=len(outcomes),
        ta_median=float(np.median(scores)) if scores.size else None,
        ta_max=float(scores.max()) if scores.size else None,
        ta_metric_selected=selected.accuracy,
    )
    l.info(f"Cell h1={cell.h1}, h2={cell.h2}, L={cell.L}: median TA={result.ta_median}, max TA={result.ta_max}")
    return result, outcomes


async def run_sweep_async(
    config: ExperimentConfig,
    returns: ReturnSeries,
    truth: np.ndarray | None,
    directions: np.ndarray | None = None,
) -> SweepReport:
    """All cells of the grid, concurrently, sharing one worker limit."""
    if truth is None:
        raise ContractError("A sweep scores every cell and needs --truth")
    cells = config.cells()
    limiter = anyio.CapacityLimiter(meta_config.WORKERS)
    results: list[tuple[SweepCell, list[RunOutcome]] | None] = [None] * len(cells)

    async def _one(index: int, cell: CellConfig) -> None:
        results[index] = await run_cell_async(config, cell, returns, truth, directions, limiter)

    l.info(f"Sweeping {len(cells)} cell(s) with {config.n_runs} run(s) each")
    try:
        async with anyio.create_task_group() as tg:
            for index, cell in enumerate(cells):
                tg.start_soon(_one, index, cell)
    except ExceptionGroup as group:
        raise first_error(group) from group

    finished = [result for result in results if result is not None]
    report = SweepReport(
        cells=[cell for cell, _ in finished],
        seeds={
            cell_key(cell): [(o.seeds.seed, o.seeds.delta) for o in outcomes]
            for cell, outcomes in finished
        },
    )
    if report.failed:
        l.warning(f"{len(report.failed)} of {len(report.cells)} cell(s) failed")
    l.success(f"Sweep finished: {len(report.cells) - len(report.failed)} cell(s) scored")
    return report
