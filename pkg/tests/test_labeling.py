import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from regime_swk.models.exceptions import ContractError, ShapeError, SizeGuardError
from regime_swk.models.labeling import (
    UNLABELED,
    LabeledSeries,
    apply_mapping,
    contingency,
    majority_vote,
    map_clusters,
    per_regime_accuracy,
    regime_stats,
    total_accuracy,
)
from regime_swk.models.measures import LiftConfig, log_returns


def _labeled(labels, truth=None) -> LabeledSeries:
    labels = np.asarray(labels, dtype=np.int64)
    coverage = (labels != UNLABELED).astype(np.int64)
    return LabeledSeries(labels=labels, coverage=coverage, votes_for=coverage, truth=truth)


# --- majority_vote ---

def test_majority_vote_non_overlapping_windows_copy_assignments():
    labeled = majority_vote(np.array([1, 0, 1]), LiftConfig(h1=2, h2=2), series_length=6)
    assert labeled.labels.tolist() == [1, 1, 0, 0, 1, 1]
    assert labeled.coverage.tolist() == [1] * 6


def test_majority_vote_overlaps_and_tail():
    # windows [0,4) [2,6) [4,8) on a series of 9 points
    labeled = majority_vote(np.array([0, 1, 1]), LiftConfig(h1=4, h2=2), series_length=9)
    assert labeled.coverage.tolist() == [1, 1, 2, 2, 2, 2, 1, 1, 0]
    assert labeled.labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 1, UNLABELED]
    assert labeled.votes_for.tolist() == [1, 1, 1, 1, 2, 2, 1, 1, 0]


def test_majority_vote_tie_keeps_previous_label():
    # point 1 gets one vote for each cluster; point 0 holds 1
    labeled = majority_vote(np.array([1, 0]), LiftConfig(h1=2, h2=1), series_length=3)
    assert labeled.labels.tolist() == [1, 1, 0]


def test_majority_vote_tie_lowest_id_when_previous_not_tied():
    # windows [0,3) [1,4) [2,5) voting 2, 1, 0
    labeled = majority_vote(np.array([2, 1, 0]), LiftConfig(h1=3, h2=1), series_length=5)
    # point 3 is a 1-vs-0 tie while point 2 holds 2
    assert labeled.labels.tolist() == [2, 2, 2, 0, 0]


def test_majority_vote_offset_leaves_leading_points_unlabeled():
    labeled = majority_vote(np.array([0, 0]), LiftConfig(h1=3, h2=3, delta=2), series_length=8)
    assert labeled.labels.tolist() == [UNLABELED, UNLABELED, 0, 0, 0, 0, 0, 0]


def test_majority_vote_rejects_wrong_assignment_count():
    with pytest.raises(ShapeError):
        majority_vote(np.array([0, 1]), LiftConfig(h1=2, h2=2), series_length=7)


def test_labeled_series_rejects_mismatched_truth():
    with pytest.raises(ShapeError):
        _labeled([0, 1, 0], truth=[0, 1])


# --- contingency / map_clusters ---

def test_contingency_counts_only_labeled_points():
    table = contingency(_labeled([0, 0, 1, UNLABELED], truth=[0, 1, 1, 1]))
    assert table.tolist() == [[1, 1], [0, 1]]


def test_map_clusters_identity_and_flipped():
    truth = np.array([0, 0, 1, 1, 0])
    assert map_clusters(_labeled([0, 0, 1, 1, 0], truth)) == {0: 0, 1: 1}
    assert map_clusters(_labeled([1, 1, 0, 0, 1], truth)) == {0: 1, 1: 0}


def test_map_clusters_more_clusters_than_regimes_is_injective():
    mapping = map_clusters(_labeled([0, 1, 2, 2, 2], truth=[1, 0, 0, 0, 0]), n_clusters=3)
    assert mapping == {0: 1, 1: -1, 2: 0}


def test_map_clusters_matches_hungarian(rng):
    for _ in range(50):
        k = int(rng.integers(2, 6))
        labels = rng.integers(0, k, size=200)
        truth = rng.integers(0, k, size=200)
        labeled = _labeled(labels, truth)
        table = contingency(labeled, n_clusters=k)
        rows, cols = linear_sum_assignment(table, maximize=True)
        mapping = map_clusters(labeled, n_clusters=k)
        assert sum(table[c, g] for c, g in mapping.items() if g >= 0) == table[rows, cols].sum()


def test_map_clusters_size_guard():
    labels = np.arange(9)
    with pytest.raises(SizeGuardError):
        map_clusters(_labeled(labels, truth=labels))


def test_apply_mapping_keeps_unlabeled():
    mapped = apply_mapping(np.array([0, 1, UNLABELED, 2]), {0: 1, 1: 0, 2: -1})
    assert mapped.tolist() == [1, 0, UNLABELED, UNLABELED]


# --- total_accuracy / per_regime_accuracy ---

def test_total_accuracy_is_label_permutation_invariant():
    truth = np.array([0, 0, 0, 1, 1, 0])
    assert total_accuracy(_labeled([0, 0, 0, 1, 1, 0], truth)) == 1.0
    assert total_accuracy(_labeled([1, 1, 1, 0, 0, 1], truth)) == 1.0
    assert total_accuracy(_labeled([0, 0, 1, 1, 1, 0], truth)) == pytest.approx(5 / 6)


def test_total_accuracy_ignores_unlabeled_points():
    labeled = _labeled([0, UNLABELED, 1], truth=[0, 1, 1])
    assert total_accuracy(labeled) == 1.0


def test_total_accuracy_empty_partition_is_nan():
    labeled = _labeled([0, 1, 1], truth=[0, 1, 1])
    assert math.isnan(total_accuracy(labeled, partition=np.zeros(3, dtype=bool)))
    assert total_accuracy(labeled, partition=np.array([1, 2])) == 1.0


def test_total_accuracy_needs_truth():
    with pytest.raises(ContractError):
        total_accuracy(_labeled([0, 1]))


def test_total_accuracy_is_coverage_weighted_mix_of_regime_accuracies(rng):
    truth = (rng.random(500) < 0.2).astype(np.int64)
    labels = np.where(rng.random(500) < 0.85, truth, 1 - truth)
    labeled = _labeled(labels, truth)
    mapping = map_clusters(labeled)
    per_regime = per_regime_accuracy(labeled, mapping)
    weights = {g: np.mean(truth == g) for g in per_regime}
    mixed = sum(weights[g] * per_regime[g] for g in per_regime)
    assert total_accuracy(labeled, mapping=mapping) == pytest.approx(mixed, abs=1e-12)


# --- regime_stats ---

def test_regime_stats_recovers_correlation_sign(rng):
    z = rng.standard_normal((4000, 2))
    positive = z[:2000] @ np.linalg.cholesky([[1.0, 0.5], [0.5, 1.0]]).T
    negative = z[2000:] @ np.linalg.cholesky([[1.0, -0.5], [-0.5, 1.0]]).T
    labels = np.repeat([0, 1], 2000)
    stats = regime_stats(np.vstack([positive, negative]), _labeled(labels))
    assert stats.summary(0).correlation[0][1] == pytest.approx(0.5, abs=0.05)
    assert stats.summary(1).correlation[0][1] == pytest.approx(-0.5, abs=0.05)
    assert stats.summary(0).count == 2000


def test_regime_stats_constant_regime_has_zero_std_and_no_correlation():
    returns = np.array([[0.1, 0.2], [0.1, 0.3], [0.5, 0.1], [0.4, 0.6]])
    stats = regime_stats(returns, _labeled([0, 0, 1, 1]))
    constant = stats.summary(0)
    assert constant.std[0] == 0.0
    assert not constant.correlation_defined
    assert constant.correlation is None
    assert stats.summary(1).correlation_defined


def test_regime_stats_suppresses_single_point_regimes():
    stats = regime_stats(np.array([0.1, 0.2, 0.3]), _labeled([0, 0, 1]))
    assert stats.summary(1).suppressed
    assert stats.summary(1).mean is None
    assert not stats.summary(0).suppressed


def test_regime_stats_destandardizes_return_series(dataset_1d):
    returns = log_returns(dataset_1d.prices)
    labeled = _labeled(dataset_1d.returns_truth)
    stats = regime_stats(returns, labeled)
    raw = np.diff(np.log(dataset_1d.prices.values[:, 0]))
    assert stats.summary(1).mean[0] == pytest.approx(raw[dataset_1d.returns_truth == 1].mean(), rel=1e-9)


def test_regime_stats_rejects_wrong_length():
    with pytest.raises(ShapeError):
        regime_stats(np.zeros(4), _labeled([0, 1]))
