"""Multi-information through the chain rule.

``I_r(y_1..y_r) = sum_k I(y_k; y_{k+1}, ..., y_r)``: every term is a
mutual information between one variable and the product-alphabet
combination of the remaining ones, so each is estimated with the pairwise
extrapolation machinery. For triplets, the three choices of the leading
(pivot) variable give three estimates of the same quantity.

All terms of one chain reuse the same subsample draws, so at a fixed level
the plug-in chain rule is an exact identity. The three triplet compositions
use independent draws (one stream per pivot) so that comparing them is a
genuine cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _seeding
from .calibrate import MIEstimate, select_level
from .exceptions import InsufficientSampleError
from .extrapolate import DEFAULT_SCHEDULE, SubsampleSchedule, extrapolate_levels

DEFAULT_TRIPLET_BSTAR = 4


@dataclass(frozen=True, eq=False)
class MultiInfoEstimate:
    value_bits: float
    order: tuple
    terms: tuple
    error_bar_bits: float

    def to_dict(self) -> dict:
        return {"value_bits": self.value_bits, "order": list(self.order),
                "error_bar_bits": self.error_bar_bits,
                "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True, eq=False)
class TripletEstimate:
    """Three chain-rule compositions of the triplet information.

    ``compositions[p]`` uses variable ``p`` as the pivot:
    ``I(y_p; y_q, y_s) + I(y_q; y_s)``.
    """

    compositions: np.ndarray
    composition_error_bars: np.ndarray
    details: tuple = ()
    ids: tuple = ()

    @property
    def mean_bits(self) -> float:
        return float(np.mean(self.compositions))

    @property
    def spread_bits(self) -> float:
        return float(np.max(self.compositions) - np.min(self.compositions))

    def to_dict(self) -> dict:
        passed, _ = consistency_check(self)
        return {"ids": list(self.ids),
                "compositions": self.compositions.tolist(),
                "composition_error_bars": self.composition_error_bars.tolist(),
                "mean_bits": self.mean_bits, "spread_bits": self.spread_bits,
                "consistent": passed}


def _stack(xs) -> np.ndarray:
    arr = np.asarray([np.asarray(x, dtype=float) for x in xs])
    if arr.ndim != 2:
        raise ValueError("all vectors must have equal length")
    return arr


def _guard(n: int, b: int, r: int, sched: SubsampleSchedule) -> None:
    need = b ** (r - 1)
    smallest = min(sched.sizes(n))
    if smallest < need:
        raise InsufficientSampleError(
            f"smallest subsample ({smallest}) cannot populate the {need}-symbol "
            f"joint alphabet of {r - 1} variables at b={b}")


def chain_extrapolations(cols: np.ndarray, order: Sequence[int], levels, sched, seed, requantize):
    """Per-level extrapolations of every chain term, all on the same draws."""
    out = []
    for k in range(len(order) - 1):
        head = cols[order[k]]
        tail = cols[list(order[k + 1:])]
        out.append(extrapolate_levels([head, tail], levels, sched,
                                      _seeding.task_rng(seed), requantize))
    return out


def estimate_multiinformation(xs, order: Sequence[int] | None = None, b: int = 3,
                              sched: SubsampleSchedule = DEFAULT_SCHEDULE, rng=0,
                              requantize: bool = True) -> MultiInfoEstimate:
    """Chain-rule estimate of the multi-information of ``r`` vectors.

    Each term gets its own level selection over ``2..b``.
    """
    cols = _stack(xs)
    r, n = cols.shape
    if r < 2:
        raise ValueError("need at least two variables")
    order = tuple(range(r)) if order is None else tuple(int(o) for o in order)
    if sorted(order) != list(range(r)):
        raise ValueError(f"{order} is not a permutation of {r} variables")
    if b < 2:
        raise ValueError("b must be at least 2")
    _guard(n, b, r, sched)
    seed = _seeding.base_entropy(rng)
    per_term = chain_extrapolations(cols, order, list(range(2, b + 1)), sched, seed, requantize)
    terms = tuple(select_level(per_b, b) for per_b in per_term)
    value = math.fsum(t.value_bits for t in terms)
    err = math.sqrt(math.fsum(t.error_bar_bits ** 2 for t in terms))
    return MultiInfoEstimate(value, order, terms, err)


def estimate_triplet(xs, b: int = DEFAULT_TRIPLET_BSTAR,
                     sched: SubsampleSchedule = DEFAULT_SCHEDULE,
                     b_star_triplet: int = DEFAULT_TRIPLET_BSTAR, rng=0,
                     requantize: bool = True, ids: tuple = ()) -> TripletEstimate:
    """All three pivot compositions of the triplet information."""
    cols = _stack(xs)
    if cols.shape[0] != 3:
        raise ValueError("estimate_triplet needs exactly three vectors")
    if b > b_star_triplet:
        raise ValueError(f"level {b} exceeds the triplet critical level {b_star_triplet}")
    seed = _seeding.base_entropy(rng)
    comps, errs, details = [], [], []
    for p in range(3):
        q, s = [v for v in range(3) if v != p]
        est = estimate_multiinformation(cols, (p, q, s), b, sched, [seed, p], requantize)
        comps.append(est.value_bits)
        errs.append(est.error_bar_bits)
        details.append(est)
    return TripletEstimate(np.array(comps), np.array(errs), tuple(details), tuple(ids))


def triplet_levels(xs, levels: Sequence[int], sched: SubsampleSchedule = DEFAULT_SCHEDULE,
                   rng=0, requantize: bool = True) -> dict[int, float]:
    """Triplet information at each fixed level (pivot 0, no level selection).

    This is the quantity averaged over shuffled triplets during calibration.
    """
    cols = _stack(xs)
    seed = _seeding.base_entropy(rng)
    outer, inner = chain_extrapolations(cols, (0, 1, 2), list(levels), sched, seed, requantize)
    return {b: outer[b].intercept_bits + inner[b].intercept_bits for b in levels}


def consistency_check(t: TripletEstimate) -> tuple[bool, dict]:
    """Compositions agree when their spread is within two of the largest error bar."""
    limit = 2.0 * float(np.max(t.composition_error_bars))
    passed = t.spread_bits <= limit
    return passed, {"compositions": t.compositions.tolist(),
                    "spread_bits": t.spread_bits, "limit_bits": limit}
