"""Plug-in (naive) entropy and mutual information, plus exact references.

All quantities are in bits. The scalar functions accumulate with
``math.fsum``; :func:`batch_plugin_mi` is the vectorized kernel used inside
the extrapolation loop.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quantize import QuantizedVector

_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ValueError("contingency table must be 2-D")
        if np.any(counts < 0) or not np.all(counts == np.round(counts)):
            raise ValueError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        if counts.sum() < 1:
            raise ValueError("contingency table is empty")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def T(self) -> "ContingencyTable":
        return ContingencyTable(self.counts.T)


@dataclass(frozen=True, eq=False)
class JointTable:
    """A probability table over a product alphabet with shape ``dims``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(probs.ravel()) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "probs", probs)

    @property
    def dims(self) -> tuple:
        return self.probs.shape

    def marginal(self, axes: Sequence[int]) -> np.ndarray:
        drop = tuple(a for a in range(self.probs.ndim) if a not in axes)
        m = self.probs.sum(axis=drop)
        # sum() returns axes in ascending order; reorder to the request
        ordered = sorted(axes)
        return np.transpose(m, [ordered.index(a) for a in axes])


def tabulate(qa: QuantizedVector, qb: QuantizedVector) -> ContingencyTable:
    if len(qa) != len(qb):
        raise ValueError(f"length mismatch: {len(qa)} vs {len(qb)}")
    if len(qa) == 0:
        raise ValueError("cannot tabulate empty vectors")
    flat = np.bincount(qa.symbols * qb.levels + qb.symbols,
                       minlength=qa.levels * qb.levels)
    return ContingencyTable(flat.reshape(qa.levels, qb.levels))


def _entropy_of(p: np.ndarray) -> float:
    p = p[p > 0]
    return -math.fsum((p * np.log2(p)).tolist())


def plugin_entropy(counts) -> float:
    """Naive entropy of a histogram, in bits."""
    counts = np.asarray(counts, dtype=float).ravel()
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = math.fsum(counts.tolist())
    if total <= 0:
        raise ValueError("counts must not all be zero")
    return max(_entropy_of(counts / total), 0.0)


def plugin_mi(table: ContingencyTable) -> float:
    """Naive mutual information of a contingency table, in bits.

    >>> plugin_mi(ContingencyTable([[50, 0], [0, 50]]))
    1.0
    """
    counts = table.counts.astype(float)
    total = counts.sum()
    rows = counts.sum(axis=1)
    cols = counts.sum(axis=0)
    i, j = np.nonzero(counts)
    c = counts[i, j]
    terms = (c / total) * np.log2(c * total / (rows[i] * cols[j]))
    mi = math.fsum(terms.tolist())
    if mi < 0:
        if mi < -1e-12:
            raise ArithmeticError(f"negative plug-in information {mi}")
        mi = 0.0
    return mi


def _xlogx(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c, dtype=float)
    nz = c > 0
    out[nz] = c[nz] * np.log(c[nz])
    return out


@functools.lru_cache(maxsize=64)
def xlogx_table(n: int) -> np.ndarray:
    """``c * ln(c)`` for integer ``c`` in ``0 .. n``."""
    table = _xlogx(np.arange(n + 1, dtype=float))
    table.setflags(write=False)
    return table


def batch_plugin_mi(counts: np.ndarray, table: np.ndarray | None = None) -> np.ndarray:
    """Plug-in MI for a stack of tables with shape ``(n_tables, A, B)``.

    ``table`` is an optional :func:`xlogx_table` covering the largest total;
    with it the integer counts are looked up instead of taking logs.
    """
    counts = np.asarray(counts)
    f = _xlogx if table is None else table.__getitem__
    total = counts.sum(axis=(1, 2))
    joint = f(counts).sum(axis=(1, 2))
    rows = f(counts.sum(axis=2)).sum(axis=1)
    cols = f(counts.sum(axis=1)).sum(axis=1)
    mi = (joint - rows - cols + f(total)) / (total * _LN2)
    return np.where(mi < 0, np.maximum(mi, 0.0), mi)


def exact_multiinformation(jt: JointTable) -> float:
    """Sum of marginal entropies minus the joint entropy, in bits."""
    r = jt.probs.ndim
    h_marg = math.fsum(_entropy_of(jt.marginal([k]).ravel()) for k in range(r))
    value = h_marg - _entropy_of(jt.probs.ravel())
    return 0.0 if -1e-12 < value < 0 else value


def _mi_between(jt: JointTable, head: int, tail: Sequence[int]) -> float:
    h_head = _entropy_of(jt.marginal([head]).ravel())
    h_tail = _entropy_of(jt.marginal(list(tail)).ravel())
    h_both = _entropy_of(jt.marginal([head, *tail]).ravel())
    return h_head + h_tail - h_both


def exact_chain_terms(jt: JointTable, order: Sequence[int]) -> list[float]:
    """Terms ``I(y_o[k]; y_o[k+1], ..., y_o[r-1])`` for ``k = 0 .. r-2``.

    Their sum equals :func:`exact_multiinformation` for any ``order``.
    """
    r = jt.probs.ndim
    order = [int(o) for o in order]
    if sorted(order) != list(range(r)):
        raise ValueError(f"{order} is not a permutation of {r} variables")
    return [_mi_between(jt, order[k], order[k + 1:]) for k in range(r - 1)]
