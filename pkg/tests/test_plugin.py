import itertools
import math

import numpy as np
import pytest

from directinfo.plugin import (
    ContingencyTable,
    JointTable,
    batch_plugin_mi,
    exact_chain_terms,
    exact_multiinformation,
    plugin_entropy,
    plugin_mi,
    tabulate,
    xlogx_table,
)
from directinfo.quantize import QuantizedVector

# reference values computed with scipy.stats.entropy(base=2)
MI_40_10 = 0.27807190511263746
H_75_25 = 0.8112781244591328


def test_tabulate_enumeration():
    t = tabulate(QuantizedVector(2, [0, 0, 1, 1]), QuantizedVector(2, [0, 1, 0, 1]))
    np.testing.assert_array_equal(t.counts, [[1, 1], [1, 1]])


def test_tabulate_diagonal():
    q = QuantizedVector(2, [0, 1, 0, 1])
    np.testing.assert_array_equal(tabulate(q, q).counts, [[2, 0], [0, 2]])


def test_tabulate_empty():
    with pytest.raises(ValueError):
        tabulate(QuantizedVector(2, []), QuantizedVector(2, []))


@pytest.mark.parametrize("counts, expected", [
    ([[25, 25], [25, 25]], 0.0),
    ([[50, 0], [0, 50]], 1.0),
    ([[40, 10], [10, 40]], MI_40_10),
])
def test_plugin_mi_values(counts, expected):
    assert plugin_mi(ContingencyTable(counts)) == pytest.approx(expected, abs=1e-14)


def test_plugin_mi_symmetric():
    t = ContingencyTable(np.random.default_rng(0).integers(0, 20, size=(3, 5)))
    assert plugin_mi(t) == pytest.approx(plugin_mi(t.T), abs=1e-14)


@pytest.mark.parametrize("counts, expected", [([50, 50], 1.0), ([100], 0.0),
                                               ([75, 25], H_75_25)])
def test_plugin_entropy_values(counts, expected):
    assert plugin_entropy(counts) == pytest.approx(expected, abs=1e-14)


def test_contingency_validation():
    with pytest.raises(ValueError):
        ContingencyTable([[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        ContingencyTable([[1, -1], [0, 2]])
    with pytest.raises(ValueError):
        ContingencyTable([1, 2])


def test_batch_matches_scalar():
    g = np.random.default_rng(3)
    counts = g.integers(0, 30, size=(20, 3, 4))
    counts[0] = 0
    counts[0, 1, 2] = 7
    expected = [plugin_mi(ContingencyTable(c)) for c in counts]
    np.testing.assert_allclose(batch_plugin_mi(counts), expected, atol=1e-13)
    np.testing.assert_allclose(batch_plugin_mi(counts, xlogx_table(int(counts.sum(axis=(1, 2)).max()))),
                               expected, atol=1e-13)


def _xor_table():
    p = np.zeros((2, 2, 2))
    for a, b in itertools.product((0, 1), repeat=2):
        p[a, b, a ^ b] = 0.25
    return JointTable(p)


def test_multiinformation_independent_bits():
    assert exact_multiinformation(JointTable(np.full((2, 2, 2), 0.125))) == pytest.approx(0, abs=1e-15)


def test_multiinformation_xor_and_pairs():
    jt = _xor_table()
    assert exact_multiinformation(jt) == pytest.approx(1.0, abs=1e-14)
    for a, b in itertools.combinations(range(3), 2):
        pair = jt.marginal([a, b])
        assert exact_multiinformation(JointTable(pair)) == pytest.approx(0.0, abs=1e-14)


def test_multiinformation_copies():
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 1, 1] = 0.5
    assert exact_multiinformation(JointTable(p)) == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(exact_chain_terms(JointTable(p), [0, 1, 2]), [1.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("order", list(itertools.permutations(range(3))))
def test_chain_terms_xor(order):
    terms = exact_chain_terms(_xor_table(), order)
    assert sorted(np.round(terms, 12)) == [0.0, 1.0]
    assert math.fsum(terms) == pytest.approx(1.0, abs=1e-14)


def test_chain_terms_product_distribution():
    p = np.einsum("i,j,k->ijk", [0.2, 0.8], [0.5, 0.3, 0.2], [0.1, 0.9])
    assert np.allclose(exact_chain_terms(JointTable(p), [2, 0, 1]), 0.0, atol=1e-14)


def test_chain_terms_bad_order():
    with pytest.raises(ValueError):
        exact_chain_terms(_xor_table(), [0, 0, 1])


def test_joint_table_validation():
    with pytest.raises(ValueError):
        JointTable([0.5, 0.6])
    with pytest.raises(ValueError):
        JointTable([1.5, -0.5])


def test_marginal_respects_requested_order():
    p = np.random.default_rng(0).random((2, 3, 4))
    jt = JointTable(p / p.sum())
    assert jt.marginal([2, 0]).shape == (4, 2)
