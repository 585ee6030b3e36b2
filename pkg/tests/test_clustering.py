import numpy as np
import pytest
from pydantic import ValidationError

from regime_swk.models.clustering import (
    Centroid,
    ClusterConfig,
    assign_step,
    init_centroids,
    multi_run,
    multi_run_async,
    run_clustering,
    run_wk_means,
    select_best,
    update_step,
)
from regime_swk.models.exceptions import InsufficientDataError, ShapeError
from regime_swk.models.measures import LiftConfig, Stream, lift, log_returns
from regime_swk.models.seeding import derive_run_seed, derive_run_seeds
from regime_swk.models.wasserstein import ProjectedFamily, make_projection_set, project_family


def _two_groups(rng: np.random.Generator, per_group: int = 20, h1: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Sorted atoms of two well separated groups of 1D measures and their true group."""
    low = np.sort(rng.normal(0.0, 1.0, size=(per_group, h1)), axis=1)
    high = np.sort(rng.normal(0.0, 3.0, size=(per_group, h1)) + 5.0, axis=1)
    return np.vstack([low, high]), np.repeat([0, 1], per_group)


def _same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.array_equal(a, b) or np.array_equal(a, 1 - b))


# --- ClusterConfig ---

def test_cluster_config_defaults_and_bounds():
    cfg = ClusterConfig(K=2)
    assert cfg.p == 1
    assert cfg.epsilon > 0
    with pytest.raises(ValidationError):
        ClusterConfig(K=0)
    with pytest.raises(ValidationError):
        ClusterConfig(K=2, p=3)


# --- init_centroids ---

def test_init_centroids_are_distinct_windows(rng):
    points, _ = _two_groups(rng)
    centroids = init_centroids(points, ClusterConfig(K=4, seed=3))
    assert len(centroids) == 4
    rows = {tuple(c.per_direction) for c in centroids}
    assert len(rows) == 4
    assert all(any(np.array_equal(c.per_direction, row) for row in points) for c in centroids)


def test_init_centroids_deterministic(rng):
    points, _ = _two_groups(rng)
    first = init_centroids(points, ClusterConfig(K=3, seed=9))
    second = init_centroids(points, ClusterConfig(K=3, seed=9))
    for a, b in zip(first, second, strict=True):
        np.testing.assert_array_equal(a.per_direction, b.per_direction)


def test_init_centroids_differ_between_seeds(rng):
    points, _ = _two_groups(rng)

    def picked(seed: int) -> frozenset:
        return frozenset(tuple(c.per_direction.tolist()) for c in init_centroids(points, ClusterConfig(K=2, seed=seed)))

    distinct = sum(picked(2 * pair) != picked(2 * pair + 1) for pair in range(50))
    assert distinct >= 45


def test_init_centroids_needs_enough_windows(rng):
    with pytest.raises(InsufficientDataError):
        init_centroids(np.sort(rng.normal(size=(2, 5)), axis=1), ClusterConfig(K=3))


# --- assign_step ---

def test_assign_step_picks_nearest_and_lowest_id_on_ties():
    points = np.array([[0.0, 1.0], [4.0, 5.0], [2.0, 3.0]])
    centroids = [Centroid(per_direction=[0.0, 1.0]), Centroid(per_direction=[4.0, 5.0])]
    assert assign_step(points, centroids).tolist() == [0, 1, 0]


def test_assign_step_needs_a_centroid():
    with pytest.raises(InsufficientDataError):
        assign_step(np.zeros((3, 2)), np.zeros((0, 2)))


# --- update_step ---

def test_update_step_is_per_cluster_median():
    points = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 9.0], [10.0, 11.0]])
    centroids = update_step(points, np.array([0, 0, 0, 1]), K=2, p=1)
    np.testing.assert_array_equal(centroids[0].per_direction, [2.0, 3.0])
    np.testing.assert_array_equal(centroids[1].per_direction, [10.0, 11.0])


def test_update_step_mean_for_p2():
    points = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 8.0]])
    centroids = update_step(points, np.array([0, 0, 0]), K=1, p=2)
    np.testing.assert_allclose(centroids[0].per_direction, [2.0, 4.0])


def test_update_step_reseeds_empty_cluster_with_farthest_point():
    points = np.array([[0.0], [1.0], [2.0], [50.0]])
    current = np.array([[1.0], [100.0]])
    centroids = update_step(points, np.array([0, 0, 0, 0]), K=2, p=1, centroids=current)
    np.testing.assert_array_equal(centroids[1].per_direction, [50.0])
    np.testing.assert_array_equal(centroids[0].per_direction, [1.0])


# --- run_wk_means / run_clustering ---

def test_wk_means_separates_two_groups(rng):
    points, groups = _two_groups(rng)
    result = run_wk_means(points, ClusterConfig(K=2, seed=1))
    assert result.converged
    assert _same_partition(result.assignments, groups)
    assert result.final.centroid_shift < ClusterConfig(K=2).epsilon


def test_wk_means_assignments_in_range_and_diagnostics(rng):
    points, _ = _two_groups(rng)
    result = run_wk_means(points, ClusterConfig(K=3, seed=2))
    assert result.assignments.min() >= 0 and result.assignments.max() < 3
    assert [d.iteration for d in result.diagnostics] == list(range(1, result.iterations + 1))
    assert result.diagnostics[0].assignments_changed == points.shape[0]
    assert all(d.mean_centroid_centroid > 0 for d in result.diagnostics)


def test_objective_never_increases_for_p1(rng):
    points = np.sort(rng.standard_t(df=3, size=(80, 10)), axis=1)
    for seed in range(5):
        result = run_wk_means(points, ClusterConfig(K=3, seed=seed))
        objectives = [d.objective for d in result.diagnostics]
        for before, after in zip(objectives, objectives[1:]):
            assert after <= before * (1 + 1e-12) + 1e-12


def test_single_cluster_has_undefined_centroid_distance(rng):
    points, _ = _two_groups(rng)
    result = run_wk_means(points, ClusterConfig(K=1))
    assert result.final.mean_centroid_centroid == 0.0
    assert not result.final.centroid_centroid_defined
    assert (result.assignments == 0).all()


def test_iteration_cap_reports_not_converged(rng):
    points, _ = _two_groups(rng)
    result = run_wk_means(points, ClusterConfig(K=2, seed=0, max_iterations=1, epsilon=1e-300))
    assert result.iterations == 1
    assert not result.converged


def test_huge_tolerance_stops_after_first_update(rng):
    points, _ = _two_groups(rng)
    result = run_wk_means(points, ClusterConfig(K=2, seed=3, epsilon=1e6))
    assert result.iterations == 1
    assert result.converged


def test_permuting_measures_only_relabels_clusters(rng):
    low = np.sort(rng.normal(0.0, 1.0, size=(20, 12)), axis=1)
    high = np.sort(rng.normal(50.0, 1.0, size=(20, 12)), axis=1)
    points, groups = np.vstack([low, high]), np.repeat([0, 1], 20)
    reference = run_wk_means(points, ClusterConfig(K=2, seed=0)).assignments
    assert _same_partition(reference, groups)
    for trial in range(20):
        order = rng.permutation(points.shape[0])
        permuted = run_wk_means(points[order], ClusterConfig(K=2, seed=trial)).assignments
        restored = np.empty_like(permuted)
        restored[order] = permuted
        assert _same_partition(restored, reference)


def test_wk_means_rejects_three_dimensional_input():
    with pytest.raises(ShapeError):
        run_wk_means(np.zeros((4, 2, 3)), ClusterConfig(K=2))


def test_sliced_with_one_direction_reduces_to_wk_means(returns_1d):
    lift_cfg = LiftConfig(h1=35, h2=28, delta=3)
    family = project_family(lift(returns_1d, lift_cfg), make_projection_set(1, 1))
    cfg = ClusterConfig(K=2, seed=42)
    sliced = run_clustering(family, cfg)
    plain = run_wk_means(family.sorted_atoms[:, 0, :], cfg, delta_used=3)
    np.testing.assert_array_equal(sliced.assignments, plain.assignments)
    np.testing.assert_array_equal(sliced.centroids[:, 0, :], plain.centroids)
    assert [d.objective for d in sliced.diagnostics] == [d.objective for d in plain.diagnostics]
    assert sliced.delta_used == 3


@pytest.mark.parametrize('seed', range(10))
def test_sliced_with_one_direction_is_bit_identical_on_one_year(dataset_1d_short, seed):
    returns = log_returns(dataset_1d_short.truncate(1).prices)
    family = project_family(lift(returns, LiftConfig(h1=35, h2=7, delta=seed % 7)), make_projection_set(1, 1))
    cfg = ClusterConfig(K=2, seed=seed)
    sliced = run_clustering(family, cfg)
    plain = run_wk_means(family.sorted_atoms[:, 0, :], cfg)
    np.testing.assert_array_equal(sliced.assignments, plain.assignments)
    np.testing.assert_array_equal(sliced.centroids[:, 0, :], plain.centroids)


def test_run_clustering_on_wrapped_sorted_atoms(rng):
    points, groups = _two_groups(rng)
    family = ProjectedFamily.from_sorted_atoms(points[:, None, :])
    result = run_clustering(family, ClusterConfig(K=2, seed=5))
    assert _same_partition(result.assignments, groups)
    assert result.centroid(0).per_direction.shape == (1, points.shape[1])


def test_accuracy_probe_is_recorded(rng):
    points, _ = _two_groups(rng)
    calls = []

    def probe(assignments: np.ndarray) -> float:
        calls.append(assignments.copy())
        return 0.5

    result = run_wk_means(points, ClusterConfig(K=2, seed=1), accuracy_probe=probe)
    assert len(calls) == result.iterations
    assert all(d.accuracy == 0.5 for d in result.diagnostics)


# --- seeding ---

def test_run_seeds_do_not_depend_on_run_count():
    five = derive_run_seeds(123, 5, h2=7)
    assert derive_run_seeds(123, 3, h2=7) == five[:3]
    assert derive_run_seed(123, 4, h2=7) == five[4]
    assert all(0 <= s.delta < 7 for s in five)
    assert len({s.seed for s in five}) == 5


# --- multi_run ---

@pytest.fixture(scope='module')
def small_stream(dataset_1d_short) -> Stream:
    return dataset_1d_short.truncate(1).prices


async def test_multi_run_async_is_ordered_and_reproducible(small_stream):
    lift_cfg, cfg, ps = LiftConfig(h1=35, h2=7), ClusterConfig(K=2, seed=11), make_projection_set(1, 1)
    first = await multi_run_async(small_stream, lift_cfg, cfg, ps, n_runs=3)
    second = await multi_run_async(small_stream, lift_cfg, cfg, ps, n_runs=3)
    assert [o.run for o in first] == [0, 1, 2]
    for a, b in zip(first, second, strict=True):
        assert a.seeds == b.seeds
        assert a.result.delta_used == a.seeds.delta
        np.testing.assert_array_equal(a.result.assignments, b.result.assignments)
        np.testing.assert_array_equal(a.labeled.labels, b.labeled.labels)
        assert a.accuracy is None


async def test_multi_run_async_scores_against_truth(dataset_1d_short):
    dataset = dataset_1d_short.truncate(1)
    outcomes = await multi_run_async(
        dataset.prices,
        LiftConfig(h1=35, h2=7),
        ClusterConfig(K=2, seed=4),
        make_projection_set(1, 1),
        n_runs=2,
        truth=dataset.returns_truth,
        track_accuracy=True,
    )
    for outcome in outcomes:
        assert 0.0 <= outcome.accuracy <= 1.0
        assert set(outcome.mapping.values()) == {0, 1}
        assert all(d.accuracy is not None for d in outcome.result.diagnostics)


async def test_multi_run_async_rejects_misaligned_truth(dataset_1d_short):
    dataset = dataset_1d_short.truncate(1)
    with pytest.raises(ShapeError):
        await multi_run_async(
            dataset.prices, LiftConfig(h1=35, h2=7), ClusterConfig(K=2), make_projection_set(1, 1),
            n_runs=1, truth=dataset.truth,
        )


def test_multi_run_blocking_wrapper(small_stream):
    returns = log_returns(small_stream)
    outcomes = multi_run(returns, LiftConfig(h1=35, h2=7), ClusterConfig(K=2), make_projection_set(1, 1), n_runs=2, master_seed=5)
    assert len(outcomes) == 2
    assert outcomes[0].labeled.length == returns.length


def test_multi_run_needs_a_run(small_stream):
    with pytest.raises(InsufficientDataError):
        multi_run(small_stream, LiftConfig(h1=35, h2=7), ClusterConfig(K=2), make_projection_set(1, 1), n_runs=0)


def test_select_best_takes_largest_centroid_distance_first_on_ties(small_stream):
    outcomes = multi_run(small_stream, LiftConfig(h1=35, h2=7), ClusterConfig(K=2), make_projection_set(1, 1), n_runs=3)
    best = select_best(outcomes)
    scores = [o.result.final.mean_centroid_centroid for o in outcomes]
    assert best.result.final.mean_centroid_centroid == max(scores)
    assert best.run == scores.index(max(scores))
    assert select_best([outcomes[1], outcomes[1].model_copy(update={'run': 5})]).run == outcomes[1].run
    with pytest.raises(InsufficientDataError):
        select_best([])
