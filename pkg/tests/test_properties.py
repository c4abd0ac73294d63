import itertools
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from directinfo.baseline import gaussian_mi, pearson
from directinfo.extrapolate import fit_line, make_schedule
from directinfo.multiinfo import TripletEstimate
from directinfo.plugin import (
    ContingencyTable,
    JointTable,
    batch_plugin_mi,
    exact_chain_terms,
    exact_multiinformation,
    plugin_entropy,
    plugin_mi,
)
from directinfo.quantize import equal_population_quantize

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(float, st.integers(1, 60), elements=finite), st.integers(1, 8))
def test_quantize_balanced_and_in_range(x, b):
    b = min(b, len(x))
    q = equal_population_quantize(x, b)
    occ = q.occupancy()
    assert q.symbols.min() >= 0 and q.symbols.max() < b
    assert occ.max() - occ.min() <= 1


@given(arrays(float, st.integers(2, 60), elements=st.floats(-50, 50)), st.integers(2, 6))
def test_quantize_invariant_to_increasing_maps(x, b):
    b = min(b, len(x))
    q = equal_population_quantize(x, b).symbols
    np.testing.assert_array_equal(equal_population_quantize(4.0 * x, b).symbols, q)


@given(arrays(np.int64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.integers(0, 40)))
def test_plugin_mi_bounds(counts):
    if counts.sum() == 0:
        counts[0, 0] = 1
    t = ContingencyTable(counts)
    mi = plugin_mi(t)
    h_rows = plugin_entropy(counts.sum(axis=1))
    h_cols = plugin_entropy(counts.sum(axis=0))
    assert -1e-12 <= mi <= min(h_rows, h_cols) + 1e-12
    assert math.isclose(mi, plugin_mi(t.T), abs_tol=1e-12)
    assert math.isclose(mi, float(batch_plugin_mi(counts[None])[0]), abs_tol=1e-12)


def _joint_tables():
    dims = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
    return dims.flatmap(lambda d: arrays(float, d, elements=st.floats(0, 1)))


@given(_joint_tables())
def test_chain_rule_identity(raw):
    if raw.sum() <= 0:
        raw = np.ones_like(raw)
    p = raw / raw.sum()
    p /= math.fsum(p.ravel())
    jt = JointTable(p)
    total = exact_multiinformation(jt)
    assert total >= -1e-12
    for order in itertools.permutations(range(3)):
        assert math.isclose(math.fsum(exact_chain_terms(jt, order)), total, abs_tol=1e-10)


@given(finite, st.floats(-100, 100).filter(lambda s: abs(s) > 1e-3))
def test_fit_line_recovers_exact_lines(a, s):
    x = np.array([1 / 700, 1 / 787, 1 / 900, 1 / 1000])
    intercept, slope = fit_line(np.column_stack([x, a + s * x]))
    assert math.isclose(intercept, a, rel_tol=1e-7, abs_tol=1e-6)
    assert math.isclose(slope, s, rel_tol=1e-6, abs_tol=1e-3)


@given(arrays(float, 20, elements=st.floats(-10, 10)), arrays(float, 20, elements=st.floats(-10, 10)),
       st.floats(0.1, 10), finite.filter(lambda c: abs(c) < 1e3))
def test_pearson_affine_and_gaussian_mi(u, v, scale, shift):
    if np.ptp(u) < 1e-3 or np.ptp(v) < 1e-3:
        return
    r = pearson(u, v)
    assert -1 <= r <= 1
    assert math.isclose(pearson(scale * u + shift, v), r, abs_tol=1e-9)
    assert math.isclose(pearson(-scale * u, v), -r, abs_tol=1e-9)
    if abs(r) < 0.999:
        assert gaussian_mi(r) >= 0


@given(st.floats(0.05, 0.95), st.floats(0.01, 0.5), st.integers(2, 60))
def test_schedule_shape(f1, gap, t1):
    f3 = min(1.0, f1 + gap)
    if f3 <= f1:
        return
    s = make_schedule(f1, f3, t1)
    assert s.fractions[0] < s.fractions[1] < s.fractions[2]
    assert math.isclose(1 / s.fractions[1], (1 / f1 + 1 / f3) / 2, rel_tol=1e-12)
    assert s.trials[0] == t1 and list(s.trials) == sorted(s.trials, reverse=True)


@settings(max_examples=50)
@given(arrays(float, 3, elements=st.floats(-5, 5)), arrays(float, 3, elements=st.floats(0, 1)))
def test_triplet_summary_invariants(comps, errs):
    t = TripletEstimate(comps, errs)
    assert t.spread_bits >= 0
    assert math.isclose(t.mean_bits, float(np.mean(comps)), abs_tol=1e-12)
