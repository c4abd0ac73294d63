import math

import numpy as np
import pytest

from directinfo.calibrate import (
    CalibrationReport,
    LevelStats,
    critical_level,
    determine_bstar,
    passes_zero,
    sample_tuples,
    select_level,
    triplet_bstar,
)
from directinfo.exceptions import BelowMinimumProbesError, CalibrationError
from directinfo.extrapolate import result_from_points
from directinfo.ingest import Dataset


def _per_b(intercepts, error_bar):
    """Fake extrapolations with given intercepts and error bars."""
    out = {}
    for b, a in intercepts.items():
        inv = np.repeat([1 / 70, 1 / 80, 1 / 90], 3)
        noise = np.tile([-1.0, 0.0, 1.0], 3) * error_bar
        out[b] = result_from_points(np.column_stack([inv, a + noise]), (b, b), 100)
    return out


def test_select_level_stops_at_insignificant_gain():
    per_b = _per_b({2: 0.30, 3: 0.45, 4: 0.50, 5: 0.505}, 0.01)
    est = select_level(per_b, 5)
    assert est.chosen_b == 4
    assert est.value_bits == pytest.approx(0.50, abs=1e-12)
    assert est.error_bar_bits == pytest.approx(0.01, abs=1e-12)


def test_select_level_all_significant():
    per_b = _per_b({b: 0.1 * b for b in range(2, 6)}, 0.01)
    assert select_level(per_b, 5).chosen_b == 5


def test_select_level_flat():
    est = select_level(_per_b({b: 0.0 for b in range(2, 6)}, 0.01), 5)
    assert est.chosen_b == 2
    assert est.value_bits == pytest.approx(0.0, abs=1e-12)


def test_select_level_takes_largest_significant_level():
    per_b = _per_b({2: 0.1, 3: 0.3, 4: 0.3, 5: 0.5}, 0.01)
    assert select_level(per_b, 5).chosen_b == 5


def test_select_level_never_exceeds_cap():
    per_b = _per_b({b: 0.1 * b for b in range(2, 8)}, 0.01)
    assert select_level(per_b, 4).chosen_b == 4


def test_select_level_invariant_above_choice():
    base = {2: 0.3, 3: 0.5, 4: 0.5}
    a = select_level(_per_b({**base, 5: 0.505}, 0.01), 5)
    b = select_level(_per_b({**base, 5: 0.495}, 0.01), 5)
    assert (a.chosen_b, a.value_bits) == (b.chosen_b, b.value_bits)


def test_select_level_missing_level():
    with pytest.raises(KeyError):
        select_level(_per_b({2: 0.1, 4: 0.2}, 0.01), 4)


def test_passes_zero_rules():
    s = LevelStats(0.004, 0.05, 1000, 0.01)
    assert passes_zero(s, 0.01, "errorbar")
    assert not passes_zero(s, 0.01, "sem")  # 2 * 0.05 / sqrt(1000) = 0.0032
    assert not passes_zero(s, 0.003, "errorbar")
    assert not passes_zero(LevelStats(0.02, 0.05, 1000, 0.03), 0.01)
    with pytest.raises(ValueError):
        passes_zero(s, 0.01, "other")


def test_critical_level_requires_every_lower_level():
    per = {2: LevelStats(0.0, 0.1, 100, 0.01), 3: LevelStats(0.05, 0.1, 100, 0.01),
           4: LevelStats(0.0, 0.1, 100, 0.01)}
    assert critical_level(per, 0.01) == 2
    assert critical_level({2: LevelStats(0.5, 0.1, 100, 0.01)}, 0.01) is None


def test_sample_tuples_distinct_and_sorted():
    t = sample_tuples(50, 2, 300, 0)
    assert len(t) == len(set(t)) == 300
    assert all(a < b for a, b in t)
    assert sample_tuples(50, 2, 300, 0) == t


def test_sample_tuples_cycle_when_too_few():
    t = sample_tuples(4, 3, 10, 0)
    assert len(t) == 10
    assert len(set(t)) == 4


def test_sample_tuples_large_space():
    t = sample_tuples(2000, 3, 50, 1)
    assert len(set(t)) == 50


@pytest.fixture(scope="module")
def independent_data():
    return Dataset.from_array(np.random.default_rng(11).normal(size=(40, 400)))


def test_determine_bstar_report(independent_data):
    rep = determine_bstar(independent_data, b_max=5, n_probe_pairs=60, rng=3)
    assert isinstance(rep, CalibrationReport)
    assert sorted(rep.per_level) == [2, 3, 4, 5]
    assert all(s.count == 60 for s in rep.per_level.values())
    assert rep.b_star is not None and 2 <= rep.b_star <= 5
    assert rep.order == "pairs"
    text = rep.to_text()
    assert text.splitlines()[-1].startswith("b_star\t")
    d = rep.to_dict()
    assert d["b_star"] == rep.b_star and set(d["per_level"]) == {"2", "3", "4", "5"}


def test_determine_bstar_deterministic(independent_data):
    a = determine_bstar(independent_data, b_max=4, n_probe_pairs=30, rng=5)
    b = determine_bstar(independent_data, b_max=4, n_probe_pairs=30, rng=5)
    assert a.to_dict() == b.to_dict()


def test_determine_bstar_workers_do_not_matter(independent_data):
    a = determine_bstar(independent_data, b_max=4, n_probe_pairs=30, rng=5)
    b = determine_bstar(independent_data, b_max=4, n_probe_pairs=30, rng=5, n_jobs=2)
    assert a.to_dict() == b.to_dict()


def test_zero_tolerance_is_unsatisfiable(independent_data):
    with pytest.raises(CalibrationError) as info:
        determine_bstar(independent_data, b_max=4, n_probe_pairs=30, tolerance_bits=0.0)
    assert info.value.report is not None and info.value.report.b_star is None


def test_too_few_probes(independent_data):
    with pytest.raises(BelowMinimumProbesError):
        determine_bstar(independent_data, n_probe_pairs=5)


def test_b_max_below_two(independent_data):
    with pytest.raises(ValueError):
        determine_bstar(independent_data, b_max=1)


@pytest.mark.slow
def test_large_sample_passes_every_level():
    ds = Dataset.from_array(np.random.default_rng(2).normal(size=(12, 100_000)))
    rep = determine_bstar(ds, b_max=8, n_probe_pairs=30, rng=0)
    assert rep.b_star == 8


def test_triplet_calibration_report(independent_data):
    rep = triplet_bstar(independent_data, b_max=4, n_probe_triplets=30, rng=1)
    assert rep.order == "triplets"
    assert sorted(rep.per_level) == [2, 3, 4]
    # bounded estimates are non-negative on average for shuffled triplets
    assert all(math.isfinite(s.mean_bits) for s in rep.per_bound.values())
