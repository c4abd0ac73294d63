import math

import numpy as np
import pytest

from conftest import planted_blocks
from directinfo.engine import (
    INSUFFICIENT_JOINT,
    UNLABELED,
    BatchConfig,
    MIMatrix,
    estimate_all_pairs,
    estimate_group_triplets,
    estimate_pair,
    exceedance,
    group_summary,
    nonspecific_pairs,
    nonspecific_triplets,
    sorted_matrix,
    verify_shuffled,
    verify_subsample_stability,
)
from directinfo.exceptions import BudgetExceededError, InsufficientJointError
from directinfo.ingest import Dataset

CFG = BatchConfig(min_joint_samples=100)


def test_defaults():
    cfg = BatchConfig()
    assert (cfg.f1, cfg.f3, cfg.t1, cfg.include_full, cfg.min_joint_samples) == (0.7, 0.9, 21, True, 200)
    assert cfg.schedule.n_points == 50


def test_all_pairs_matrix(small_dataset):
    m = estimate_all_pairs(small_dataset, CFG, 4)
    assert len(m.pairs()) == 45
    assert np.isnan(np.diag(m.values)).all()
    np.testing.assert_array_equal(m.values, m.values.T)
    assert m.values[0, 1] > 0.5
    assert ((m.chosen_b >= 2) | np.eye(10, dtype=bool)).all()
    assert m.chosen_b.max() <= 4


def test_worker_count_does_not_change_results(small_dataset):
    a = estimate_all_pairs(small_dataset, CFG, 4)
    b = estimate_all_pairs(small_dataset, BatchConfig(min_joint_samples=100, worker_count=3), 4)
    assert a.identical(b)


def test_single_pair_matches_matrix(small_dataset):
    m = estimate_all_pairs(small_dataset, CFG, 4)
    e = estimate_pair(small_dataset, 7, 2, CFG, 4)
    assert e.value_bits == m.values[2, 7] and e.chosen_b == m.chosen_b[2, 7]
    assert e.n_joint == 250


def test_fully_missing_variable_is_skipped():
    values = np.random.default_rng(0).normal(size=(3, 300))
    values[1] = np.nan
    m = estimate_all_pairs(Dataset.from_array(values), BatchConfig(), 3)
    assert m.pairs() == [(0, 2)]
    assert sorted((i, j, r) for i, j, r, _ in m.skipped) == [
        (0, 1, INSUFFICIENT_JOINT), (1, 2, INSUFFICIENT_JOINT)]
    with pytest.raises(InsufficientJointError):
        estimate_pair(Dataset.from_array(values), 0, 1, BatchConfig(), 3)


def test_min_joint_threshold_is_inclusive():
    values = np.random.default_rng(0).normal(size=(2, 200))
    assert len(estimate_all_pairs(Dataset.from_array(values), BatchConfig(), 3).pairs()) == 1


def test_sidecar_fields(small_dataset):
    side = estimate_all_pairs(small_dataset, CFG, 3).sidecar()
    assert side["b_star"] == 3 and len(side["pairs"]) == 45
    assert set(side["pairs"][0]) == {"a", "b", "value_bits", "chosen_b", "error_bar_bits", "n_joint"}


def test_shuffled_empty():
    ds = Dataset.from_array(np.zeros((2, 5)))
    assert verify_shuffled(ds, CFG, 3, 0).n == 0


def test_shuffled_summary(small_dataset):
    s = verify_shuffled(small_dataset, CFG, 3, 40, rng=1)
    assert s.n == 40
    assert abs(s.mean_bits) < 0.02
    assert 0 <= s.fraction_beyond_3_error_bars <= 1
    assert set(s.to_dict()) >= {"mean_bits", "sem_bits", "fraction_beyond_3_error_bars"}


@pytest.mark.slow
def test_levels_above_bstar_overestimate():
    values, _ = planted_blocks(60, 173, 6, 4)
    ds = Dataset.from_array(values)
    low = verify_shuffled(ds, CFG, 3, 300, rng=2)
    high = verify_shuffled(ds, CFG, 10, 300, rng=2)
    assert high.mean_bits > low.mean_bits + 3 * math.hypot(high.sem_bits, low.sem_bits)


def test_full_fraction_reproduces_reference(small_dataset):
    ref = estimate_all_pairs(small_dataset, CFG, 3)
    s = verify_subsample_stability(small_dataset, CFG, 3, fraction=1.0, reference=ref)
    assert len(s.differences) == 45
    assert not np.any(s.differences)
    assert s.share_above_threshold == 0.0


def test_tiny_fraction_excludes_everything(small_dataset):
    s = verify_subsample_stability(small_dataset, CFG, 3, fraction=0.01)
    assert len(s.differences) == 0 and s.n_excluded == 45
    assert math.isnan(s.share_above_threshold)


def test_stability_histogram(small_dataset):
    s = verify_subsample_stability(small_dataset, CFG, 3, rng=0)
    edges, counts = s.histogram()
    assert counts.sum() == len(s.differences) == 45
    assert edges[0] == -0.5 and edges[-1] == 0.5


def _matrix(values, names=None):
    n = len(values)
    m = MIMatrix.empty(names or [f"v{k}" for k in range(n)], 3)
    for i in range(n):
        for j in range(i + 1, n):
            m.set(i, j, values[i][j], 2, 0.01, 100)
    return m


def test_sorted_matrix_blocks():
    v = np.full((4, 4), 0.01)
    v[0, 2] = v[2, 0] = 0.8
    v[1, 3] = v[3, 1] = 0.6
    sm = sorted_matrix(_matrix(v), {"v0": "A", "v2": "A", "v1": "B", "v3": "B"})
    assert sm.groups == ["A", "B"]
    assert sm.order == [0, 2, 1, 3]
    assert sm.boundaries == [2, 4]
    assert sm.rendered[0, 1] == 0.8 and sm.rendered[0, 2] == 0.0


def test_sorted_matrix_single_group_orders_by_mean():
    v = np.array([[0, 0.1, 0.1], [0.1, 0, 0.9], [0.1, 0.9, 0]])
    sm = sorted_matrix(_matrix(v), {k: "g" for k in range(3)})
    assert sm.order == [1, 2, 0]


def test_sorted_matrix_ties_keep_input_order_and_unlabeled_last():
    v = np.full((4, 4), 0.2)
    sm = sorted_matrix(_matrix(v), {"v2": "x"})
    assert sm.groups == ["x", UNLABELED]
    assert sm.order == [2, 0, 1, 3]
    assert sm.threshold_bits == pytest.approx(0.2)


def test_group_triplet_counts(small_dataset):
    cfg = BatchConfig(min_joint_samples=100, triplet_budget=4)
    assert len(estimate_group_triplets(small_dataset, [0, 1, 2], cfg, 3)) == 1
    assert estimate_group_triplets(small_dataset, [0, 1], cfg, 3) == []
    assert len(estimate_group_triplets(small_dataset, ["v0", "v1", "v2", "v3"], cfg, 3)) == 4
    with pytest.raises(BudgetExceededError) as info:
        estimate_group_triplets(small_dataset, list(range(5)), cfg, 3)
    assert info.value.count == 10


def test_group_of_27_has_2925_triplets():
    assert math.comb(27, 3) == 2925


def test_exceedance_examples():
    assert exceedance([0.1, 0.2], [0.5, 0.6]) == 0.0
    draws = np.random.default_rng(0).exponential(size=(2, 4000))
    assert exceedance(draws[0], draws[1]) == pytest.approx(1 / math.e, abs=0.03)
    with pytest.raises(ValueError):
        exceedance([0.1], [])


def test_exceedance_of_identical_symmetric_draws():
    draws = np.random.default_rng(1).normal(size=(2, 4000))
    assert exceedance(draws[0], draws[1]) == pytest.approx(0.5, abs=0.1)


def test_group_summary(small_dataset):
    cfg = BatchConfig(min_joint_samples=100, n_baseline=20)
    trip = estimate_group_triplets(small_dataset, [0, 1, 2, 3], cfg, 3)
    base_t = nonspecific_triplets(small_dataset, cfg, 3)
    base_p = nonspecific_pairs(small_dataset, cfg, 3)
    m = estimate_all_pairs(small_dataset, cfg, 3)
    pairs = [m.values[i, j] for i in range(4) for j in range(i + 1, 4)]
    s = group_summary("core", [0, 1, 2, 3], trip, pairs, base_t, base_p)
    assert s.n_triplets == 4 and s.n_pairs == 6
    assert s.exceedance_triplet == 1.0 and s.exceedance_pair == 1.0
    assert s.mean_triplet_bits > s.mean_pair_bits > s.baseline_pair_mean
    with pytest.raises(ValueError):
        group_summary("x", [], trip, pairs, [], base_p)


@pytest.mark.slow
def test_pair_triplet_gap_grows_with_dependence():
    g = np.random.default_rng(7)
    n, cfg = 400, BatchConfig(min_joint_samples=100, n_baseline=60)
    noise = g.normal(size=(40, n))
    gaps = []
    for strength in (0.3, 0.6, 1.0):
        values = noise.copy()
        z = g.normal(size=n)
        values[:8] += strength * z
        ds = Dataset.from_array(values)
        trip = estimate_group_triplets(ds, range(8), cfg, 3)
        m = estimate_all_pairs(ds, cfg, 3, pairs=[(i, j) for i in range(8) for j in range(i + 1, 8)])
        pairs = [m.values[i, j] for i in range(8) for j in range(i + 1, 8)]
        s = group_summary("g", range(8), trip, pairs, nonspecific_triplets(ds, cfg, 3),
                          nonspecific_pairs(ds, cfg, 3))
        gaps.append(s.mean_triplet_bits - s.mean_pair_bits)
    assert gaps[0] < gaps[1] < gaps[2]
