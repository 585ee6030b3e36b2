"""
Wasserstein k-means on 1D measures and sliced Wasserstein k-means on their
projections, plus the multi-run driver used by experiments.

Both loops operate on arrays of sorted atoms: ``M×h1`` for Wk-means and
``M×L×h1`` for sWk-means. Centroids are never materialized in d dimensions;
a centroid is the per-direction barycentre of its members' projections.
"""
from collections.abc import Callable
from functools import partial
from typing import ClassVar

import anyio
import anyio.to_thread
import numpy as np
from loguru import logger as l
from pydantic import Field, model_validator

from regime_swk import meta_config

from .base import ArrayModelBase, ModelBase
from .exceptions import InsufficientDataError, ShapeError
from .field_types import NonNegativeInt, PositiveFloat, PositiveInt, Seed, WassersteinOrder
from .labeling import LabeledSeries, majority_vote, map_clusters, total_accuracy
from .measures import LiftConfig, ReturnSeries, Stream, lift, log_returns
from .seeding import RunSeed, derive_run_seeds
from .wasserstein import ProjectedFamily, ProjectionSet, barycentre_sorted, project_family, wp_sorted

AccuracyProbe = Callable[[np.ndarray], float]
"""Maps the current window assignments to a total accuracy."""


class ClusterConfig(ModelBase):
    """Parameters of one clustering run."""
    K: PositiveInt
    """Number of clusters."""
    p: WassersteinOrder = 1
    """Order of the Wasserstein distance."""
    epsilon: PositiveFloat = Field(default_factory=lambda: meta_config.EPSILON)
    """Stop once the summed centroid shift falls below this tolerance."""
    max_iterations: PositiveInt = Field(default_factory=lambda: meta_config.MAX_ITERATIONS)
    """Iteration cap."""
    seed: Seed = 0
    """Seed of the centroid initialization."""


class Centroid(ArrayModelBase):
    """A cluster representative, defined only by its sorted projections."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'per_direction': np.float64}

    per_direction: np.ndarray
    """L×h1 sorted atoms (h1 atoms for the plain 1D loop)."""


class IterationDiagnostics(ModelBase):
    """Metrics recorded after every assign/update step."""
    iteration: PositiveInt
    mean_sq_point_centroid: float = Field(ge=0)
    """Mean over clusters of the mean squared member-centroid distance."""
    mean_centroid_centroid: float = Field(ge=0)
    """Mean pairwise distance between centroids; 0 when K = 1."""
    centroid_centroid_defined: bool = True
    """False when K = 1 and the pairwise mean does not exist."""
    assignments_changed: NonNegativeInt
    centroid_shift: float = Field(ge=0)
    """Σ_k distance(centroid_k after update, centroid_k before update)."""
    objective: float = Field(ge=0)
    """Σ_i distance^p(point_i, assigned centroid) at the assignment step."""
    repaired_clusters: NonNegativeInt = 0
    """Number of empty clusters re-seeded in this iteration."""
    accuracy: float | None = None
    """Total accuracy after this iteration, when tracked."""


class ClusteringResult(ArrayModelBase):
    """Outcome of one clustering run."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'assignments': np.int64, 'centroids': np.float64}

    assignments: np.ndarray
    """Cluster id of every window."""
    centroids: np.ndarray
    """K×L×h1 (or K×h1) sorted centroid atoms."""
    diagnostics: list[IterationDiagnostics]
    converged: bool
    """True when the run stopped on the epsilon criterion rather than the iteration cap."""
    delta_used: NonNegativeInt = 0
    seed_used: Seed = 0

    @model_validator(mode='after')
    def _check_assignments(self) -> 'ClusteringResult':
        k = self.centroids.shape[0]
        if self.assignments.size and (self.assignments.min() < 0 or self.assignments.max() >= k):
            raise ShapeError(f"Cluster ids must lie in [0, {k})")
        return self

    @property
    def K(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def iterations(self) -> int:
        return len(self.diagnostics)

    @property
    def final(self) -> IterationDiagnostics:
        return self.diagnostics[-1]

    def centroid(self, k: int) -> Centroid:
        return Centroid(per_direction=self.centroids[k])


class RunOutcome(ModelBase):
    """One run of a multi-run experiment: seeds, clustering, voted labels and score."""
    run: NonNegativeInt
    seeds: RunSeed
    result: ClusteringResult
    labeled: LabeledSeries
    accuracy: float | None = None
    """Total accuracy of the voted labels, when ground truth is available."""
    mapping: dict[int, int] | None = None
    """Cluster → regime mapping used for the accuracy."""


# =============================================================================
# Loop building blocks (array level)
# =============================================================================

def _distance_to(points: np.ndarray, centroid: np.ndarray, p: WassersteinOrder) -> np.ndarray:
    """Distance of every point to one centroid; averages over directions when present."""
    distances = wp_sorted(points, centroid, p)
    if points.ndim == 3:
        distances = distances.mean(axis=-1)
    return distances


def _distance_matrix(points: np.ndarray, centroids: np.ndarray, p: WassersteinOrder) -> np.ndarray:
    return np.column_stack([_distance_to(points, centroid, p) for centroid in centroids])


def _pairwise_mean(centroids: np.ndarray, p: WassersteinOrder) -> float:
    k = centroids.shape[0]
    if k < 2:
        return 0.0
    pairs = [
        float(_distance_to(centroids[a][None], centroids[b], p)[0])
        for a in range(k)
        for b in range(a + 1, k)
    ]
    return float(np.mean(pairs))


def _sample_indices(m: int, cfg: ClusterConfig) -> np.ndarray:
    if m < cfg.K:
        raise InsufficientDataError(f"Cannot form K={cfg.K} clusters from M={m} windows (need M ≥ K)")
    return np.random.default_rng(cfg.seed).choice(m, size=cfg.K, replace=False)


def _assign(points: np.ndarray, centroids: np.ndarray, p: WassersteinOrder) -> tuple[np.ndarray, np.ndarray]:
    distances = _distance_matrix(points, centroids, p)
    # argmin returns the first minimum, i.e. the lowest cluster id on ties
    return distances.argmin(axis=1), distances


def _update(
    points: np.ndarray,
    assignments: np.ndarray,
    centroids: np.ndarray,
    distances: np.ndarray,
    p: WassersteinOrder,
) -> tuple[np.ndarray, int]:
    """
    Per-cluster barycentres; an empty cluster is re-seeded with the point that
    lies farthest from its own centroid. Mutates ``assignments`` for re-seeded points.
    """
    k = centroids.shape[0]
    own_distance = distances[np.arange(points.shape[0]), assignments].copy()
    sizes = np.bincount(assignments, minlength=k)
    repaired = 0
    for cluster in np.flatnonzero(sizes == 0):
        # donors must keep at least one member
        candidates = np.where(sizes[assignments] > 1, own_distance, -np.inf)
        farthest = int(candidates.argmax())
        l.warning(f"Cluster {cluster} is empty; re-seeding it with window {farthest}")
        sizes[assignments[farthest]] -= 1
        sizes[cluster] += 1
        assignments[farthest] = cluster
        own_distance[farthest] = -np.inf
        repaired += 1

    updated = np.empty_like(centroids)
    for cluster in range(k):
        updated[cluster] = barycentre_sorted(points[assignments == cluster], p)
    return updated, repaired


def _mean_sq_point_centroid(assignments: np.ndarray, distances: np.ndarray) -> float:
    own = distances[np.arange(assignments.shape[0]), assignments]
    per_cluster = [np.mean(own[assignments == c] ** 2) for c in np.unique(assignments)]
    return float(np.mean(per_cluster))


def _run_loop(
    points: np.ndarray,
    cfg: ClusterConfig,
    delta_used: int = 0,
    accuracy_probe: AccuracyProbe | None = None,
) -> ClusteringResult:
    """Alternate assignment and barycentre update until the centroids stop moving."""
    indices = _sample_indices(points.shape[0], cfg)
    centroids = points[indices].copy()
    previous: np.ndarray | None = None
    diagnostics: list[IterationDiagnostics] = []
    converged = False

    for iteration in range(1, cfg.max_iterations + 1):
        assignments, distances = _assign(points, centroids, cfg.p)
        changed = points.shape[0] if previous is None else int(np.count_nonzero(assignments != previous))
        objective = float(np.sum(distances[np.arange(points.shape[0]), assignments] ** cfg.p))
        mean_sq = _mean_sq_point_centroid(assignments, distances)

        updated, repaired = _update(points, assignments, centroids, distances, cfg.p)
        shift = float(sum(_distance_to(updated[c][None], centroids[c], cfg.p)[0] for c in range(cfg.K)))

        diagnostics.append(IterationDiagnostics(
            iteration=iteration,
            mean_sq_point_centroid=mean_sq,
            mean_centroid_centroid=_pairwise_mean(updated, cfg.p),
            centroid_centroid_defined=cfg.K > 1,
            assignments_changed=changed,
            centroid_shift=shift,
            objective=objective,
            repaired_clusters=repaired,
            accuracy=accuracy_probe(assignments) if accuracy_probe is not None else None,
        ))
        l.debug(f"Iteration {iteration}: shift={shift:.3e}, changed={changed}, objective={objective:.6g}")

        centroids, previous = updated, assignments
        if shift < cfg.epsilon:
            converged = True
            break

    if not converged:
        l.warning(f"Clustering stopped at the iteration cap ({cfg.max_iterations}) without converging")

    return ClusteringResult(
        assignments=previous,
        centroids=centroids,
        diagnostics=diagnostics,
        converged=converged,
        delta_used=delta_used,
        seed_used=cfg.seed,
    )


# =============================================================================
# Public operations
# =============================================================================

def _points(measures: ProjectedFamily | np.ndarray) -> np.ndarray:
    return measures.sorted_atoms if isinstance(measures, ProjectedFamily) else np.asarray(measures, dtype=np.float64)


def init_centroids(measures: ProjectedFamily | np.ndarray, cfg: ClusterConfig) -> list[Centroid]:
    """K distinct windows sampled uniformly without replacement, in sampled order."""
    points = _points(measures)
    return [Centroid(per_direction=points[i]) for i in _sample_indices(points.shape[0], cfg)]


def _centroid_array(centroids: list[Centroid] | np.ndarray) -> np.ndarray:
    if isinstance(centroids, np.ndarray):
        return centroids
    return np.stack([c.per_direction for c in centroids])


def assign_step(
    measures: ProjectedFamily | np.ndarray,
    centroids: list[Centroid] | np.ndarray,
    p: WassersteinOrder = 1,
) -> np.ndarray:
    """Index of the nearest centroid for every measure; ties go to the lowest id."""
    centroid_array = _centroid_array(centroids)
    if centroid_array.shape[0] == 0:
        raise InsufficientDataError("assign_step needs at least one centroid")
    assignments, _ = _assign(_points(measures), centroid_array, p)
    return assignments


def update_step(
    measures: ProjectedFamily | np.ndarray,
    assignments: np.ndarray,
    K: int,
    p: WassersteinOrder = 1,
    centroids: list[Centroid] | np.ndarray | None = None,
) -> list[Centroid]:
    """
    Per-direction barycentres of each cluster's members.

    Empty clusters are re-seeded with the measure farthest from its current
    centroid; without ``centroids`` the freshly updated barycentres of the
    non-empty clusters serve as the current centroids.
    """
    points = _points(measures)
    assignments = np.array(assignments, dtype=np.int64)
    if centroids is not None:
        current = _centroid_array(centroids)
    else:
        current = np.zeros((K, *points.shape[1:]))
        for cluster in np.unique(assignments):
            current[cluster] = barycentre_sorted(points[assignments == cluster], p)
    distances = _distance_matrix(points, current, p)
    updated, _ = _update(points, assignments, current, distances, p)
    return [Centroid(per_direction=c) for c in updated]


def run_clustering(
    measures: ProjectedFamily,
    cfg: ClusterConfig,
    accuracy_probe: AccuracyProbe | None = None,
) -> ClusteringResult:
    """sWk-means on a family of projected measures."""
    return _run_loop(measures.sorted_atoms, cfg, measures.lift.delta, accuracy_probe)


def run_wk_means(
    sorted_atoms: np.ndarray,
    cfg: ClusterConfig,
    delta_used: int = 0,
    accuracy_probe: AccuracyProbe | None = None,
) -> ClusteringResult:
    """Wk-means on 1D measures given as an M×h1 array of sorted atoms."""
    sorted_atoms = np.asarray(sorted_atoms, dtype=np.float64)
    if sorted_atoms.ndim != 2:
        raise ShapeError(f"Wk-means expects an M×h1 array, got shape {sorted_atoms.shape}")
    return _run_loop(sorted_atoms, cfg, delta_used, accuracy_probe)


# =============================================================================
# Multi-run driver
# =============================================================================

def first_error(group: BaseExceptionGroup) -> BaseException:
    """The first leaf exception of a (possibly nested) task-group failure."""
    error: BaseException = group
    while isinstance(error, BaseExceptionGroup):
        error = error.exceptions[0]
    return error


def single_run(
    returns: ReturnSeries,
    lift_base: LiftConfig,
    cluster_cfg: ClusterConfig,
    projection_set: ProjectionSet,
    seeds: RunSeed,
    truth: np.ndarray | None = None,
    track_accuracy: bool = False,
) -> RunOutcome:
    """One run of a multi-run experiment with its own initialization seed and offset."""
    lift_cfg = lift_base.model_copy(update={'delta': seeds.delta})
    family = project_family(lift(returns, lift_cfg), projection_set)
    cfg = cluster_cfg.model_copy(update={'seed': seeds.seed})

    def _accuracy(assignments: np.ndarray) -> float:
        return total_accuracy(majority_vote(assignments, lift_cfg, returns.length, truth=truth, n_clusters=cfg.K))

    probe = _accuracy if track_accuracy and truth is not None else None
    result = run_clustering(family, cfg, probe)
    labeled = majority_vote(
        result.assignments,
        lift_cfg,
        returns.length,
        truth=truth,
        timestamps=returns.timestamps,
        n_clusters=cfg.K,
    )
    accuracy, mapping = None, None
    if truth is not None:
        mapping = map_clusters(labeled, n_clusters=cfg.K)
        accuracy = total_accuracy(labeled, mapping=mapping)
    return RunOutcome(run=seeds.run, seeds=seeds, result=result, labeled=labeled, accuracy=accuracy, mapping=mapping)


async def multi_run_async(
    stream: Stream | ReturnSeries,
    lift_cfg_base: LiftConfig,
    cluster_cfg: ClusterConfig,
    projection_set: ProjectionSet,
    n_runs: int,
    truth: np.ndarray | None = None,
    master_seed: int | None = None,
    track_accuracy: bool = False,
    limiter: anyio.CapacityLimiter | None = None,
) -> list[RunOutcome]:
    """
    Run ``n_runs`` independent clusterings concurrently on worker threads.

    ``truth`` must be aligned with the return series (length N - 1). The
    outcomes are returned in run order.
    """
    if n_runs < 1:
        raise InsufficientDataError(f"n_runs must be ≥ 1, got {n_runs}")
    returns = stream if isinstance(stream, ReturnSeries) else log_returns(stream)
    if truth is not None and len(truth) != returns.length:
        raise ShapeError(f"Truth has {len(truth)} labels for {returns.length} returns")
    master = cluster_cfg.seed if master_seed is None else master_seed
    run_seeds = derive_run_seeds(master, n_runs, lift_cfg_base.h2)
    limiter = limiter or anyio.CapacityLimiter(meta_config.WORKERS)
    outcomes: list[RunOutcome | None] = [None] * n_runs

    async def _one(seeds: RunSeed) -> None:
        job = partial(single_run, returns, lift_cfg_base, cluster_cfg, projection_set, seeds, truth, track_accuracy)
        outcomes[seeds.run] = await anyio.to_thread.run_sync(job, limiter=limiter)

    l.info(
        f"Starting {n_runs} run(s): h1={lift_cfg_base.h1}, h2={lift_cfg_base.h2}, "
        f"L={projection_set.count}, K={cluster_cfg.K}, p={cluster_cfg.p}"
    )
    try:
        async with anyio.create_task_group() as tg:
            for seeds in run_seeds:
                tg.start_soon(_one, seeds)
    except ExceptionGroup as group:
        raise first_error(group) from group

    finished = [outcome for outcome in outcomes if outcome is not None]
    converged = sum(outcome.result.converged for outcome in finished)
    l.success(f"Finished {len(finished)} run(s), {converged} converged on the tolerance")
    return finished


def multi_run(
    stream: Stream | ReturnSeries,
    lift_cfg_base: LiftConfig,
    cluster_cfg: ClusterConfig,
    projection_set: ProjectionSet,
    n_runs: int,
    truth: np.ndarray | None = None,
    master_seed: int | None = None,
    track_accuracy: bool = False,
) -> list[RunOutcome]:
    """Blocking wrapper around multi_run_async for library callers."""
    return anyio.run(partial(
        multi_run_async,
        stream,
        lift_cfg_base,
        cluster_cfg,
        projection_set,
        n_runs,
        truth=truth,
        master_seed=master_seed,
        track_accuracy=track_accuracy,
    ))


def select_best(outcomes: list[RunOutcome]) -> RunOutcome:
    """The run with the largest final mean centroid-centroid distance (first run on ties)."""
    if not outcomes:
        raise InsufficientDataError("No runs to select from")
    return max(outcomes, key=lambda outcome: (outcome.result.final.mean_centroid_centroid, -outcome.run))
