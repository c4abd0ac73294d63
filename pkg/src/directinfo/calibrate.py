"""Critical quantization level from shuffled data, and final level selection.

Shuffling one member of a pair destroys any dependence, so a trustworthy
extrapolation must return zero for it. The largest level at which the
average shuffled intercept is still zero, ``b_star``, bounds the levels used
for real estimates. For each real estimate the chosen level is the last one
that improves on coarser quantizations by more than its error bar.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _seeding
from ._parallel import parallel_map
from .exceptions import BelowMinimumProbesError, CalibrationError, InsufficientSampleError
from .extrapolate import DEFAULT_SCHEDULE, ExtrapolationResult, SubsampleSchedule, extrapolate_levels
from .ingest import Dataset, joint_sample

MIN_PROBES = 30


ZERO_RULES = ("errorbar", "sem")


@dataclass(frozen=True)
class LevelStats:
    mean_bits: float
    std_bits: float
    count: int
    mean_error_bar_bits: float = math.nan

    @property
    def sem_bits(self) -> float:
        return self.std_bits / math.sqrt(self.count) if self.count else math.inf


@dataclass(frozen=True, eq=False)
class CalibrationReport:
    """Shuffled-intercept statistics per level and the resulting ``b_star``.

    ``per_level[b]`` summarizes the intercepts extrapolated at fixed level
    ``b``; ``b_star`` is derived from these and is None when even ``b = 2``
    fails the zero criterion. ``per_bound[b]`` summarizes the final
    estimates obtained when level selection is capped at ``b``, i.e. the
    average a real analysis with ``b_star = b`` would report for independent
    data.
    """

    per_level: dict
    b_star: int | None
    tolerance_bits: float
    order: str = "pairs"
    n_probes: int = 0
    intercepts: dict = field(default_factory=dict, repr=False)
    per_bound: dict = field(default_factory=dict)
    zero_rule: str = "errorbar"

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "b_star": self.b_star,
            "tolerance_bits": self.tolerance_bits,
            "n_probes": self.n_probes,
            "zero_rule": self.zero_rule,
            "per_level": {str(b): _stats_dict(s) for b, s in sorted(self.per_level.items())},
            "per_bound": {str(b): _stats_dict(s) for b, s in sorted(self.per_bound.items())},
        }

    def to_text(self) -> str:
        lines = [f"# shuffled {self.order} calibration, {self.n_probes} probes, "
                 f"tolerance {self.tolerance_bits!r} bits, rule {self.zero_rule}",
                 "b\tmean_bits\tstd_bits\tsem_bits\tmean_error_bar_bits\tcount\t"
                 "zero\tbounded_mean_bits"]
        for b, s in sorted(self.per_level.items()):
            ok = passes_zero(s, self.tolerance_bits, self.zero_rule)
            bound = self.per_bound.get(b)
            lines.append(f"{b}\t{s.mean_bits!r}\t{s.std_bits!r}\t{s.sem_bits!r}\t"
                         f"{s.mean_error_bar_bits!r}\t{s.count}\t{'yes' if ok else 'no'}\t"
                         f"{bound.mean_bits if bound else math.nan!r}")
        lines.append(f"b_star\t{self.b_star if self.b_star is not None else 'undefined'}")
        return "\n".join(lines) + "\n"


def _stats_dict(s: LevelStats) -> dict:
    return {"mean_bits": s.mean_bits, "std_bits": s.std_bits, "sem_bits": s.sem_bits,
            "mean_error_bar_bits": s.mean_error_bar_bits, "count": s.count}


def passes_zero(stats: LevelStats, tolerance_bits: float, rule: str = "errorbar") -> bool:
    """Whether the mean shuffled intercept counts as zero.

    Both rules require ``|mean| <= tolerance_bits``. The noise guard is
    ``|mean| <= mean per-probe error bar`` for ``rule="errorbar"`` and
    ``|mean| <= 2 * std / sqrt(count)`` for ``rule="sem"``. The latter
    tightens without limit as probes are added and so eventually rejects
    even the small second-order bias present at every level.
    """
    if rule not in ZERO_RULES:
        raise ValueError(f"rule must be one of {ZERO_RULES}")
    if stats.count < 2 or not math.isfinite(stats.mean_bits):
        return False
    m = abs(stats.mean_bits)
    if m > tolerance_bits:
        return False
    if rule == "sem":
        return m <= 2.0 * stats.sem_bits
    return m <= stats.mean_error_bar_bits


def critical_level(per_level: Mapping[int, LevelStats], tolerance_bits: float,
                   rule: str = "errorbar") -> int | None:
    """Largest ``b`` such that every level ``2..b`` passes :func:`passes_zero`."""
    b_star = None
    for b in sorted(per_level):
        if not passes_zero(per_level[b], tolerance_bits, rule):
            break
        b_star = b
    return b_star


@dataclass(frozen=True, eq=False)
class MIEstimate:
    """Final estimate: the intercept at the selected level, with its error bar."""

    value_bits: float
    chosen_b: int
    error_bar_bits: float
    per_b: dict
    n_joint: int = 0

    def to_dict(self, points: bool = False) -> dict:
        out = {
            "value_bits": self.value_bits,
            "chosen_b": self.chosen_b,
            "error_bar_bits": self.error_bar_bits,
            "n_joint": self.n_joint,
            "per_b": {str(b): (r.to_dict() if points else
                               {"intercept_bits": r.intercept_bits,
                                "slope_bits_samples": r.slope_bits_samples,
                                "error_bar_bits": r.error_bar_bits})
                      for b, r in sorted(self.per_b.items())},
        }
        return out


def select_level(per_b: Mapping[int, ExtrapolationResult], b_star: int) -> MIEstimate:
    """Pick the finest level whose intercept gain over ``b - 1`` beats its error bar.

    Examples
    --------
    Intercepts 0.30, 0.45, 0.50, 0.505 at b = 2..5 with error bars 0.01: the
    last step (0.005) is not significant, so b = 4 is chosen.
    """
    if b_star < 2:
        raise ValueError("b_star must be at least 2")
    missing = [b for b in range(2, b_star + 1) if b not in per_b]
    if missing:
        raise KeyError(f"missing extrapolations for levels {missing}")
    chosen = 2
    for b in range(3, b_star + 1):
        gain = per_b[b].intercept_bits - per_b[b - 1].intercept_bits
        if gain > per_b[b].error_bar_bits:
            chosen = b
    best = per_b[chosen]
    n = getattr(best, "n", 0)
    return MIEstimate(best.intercept_bits, chosen, best.error_bar_bits,
                      {b: per_b[b] for b in range(2, b_star + 1)}, n)


def sample_tuples(n_vars: int, r: int, count: int, rng) -> list[tuple]:
    """``count`` sorted r-subsets of ``range(n_vars)``, without replacement when possible.

    When fewer than ``count`` distinct subsets exist, all of them are cycled.
    """
    total = math.comb(n_vars, r)
    if total == 0:
        raise ValueError(f"need at least {r} variables, have {n_vars}")
    if count >= total:
        every = list(itertools.combinations(range(n_vars), r))
        return [every[k % total] for k in range(count)]
    rng = np.random.default_rng(rng)
    if total <= 4 * count or total < 200_000:
        every = list(itertools.combinations(range(n_vars), r))
        pick = rng.choice(total, size=count, replace=False)
        return [every[k] for k in pick]
    seen, out = set(), []
    while len(out) < count:
        t = tuple(sorted(rng.choice(n_vars, size=r, replace=False).tolist()))
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _probe_row(levels, intercepts, errors, bounded) -> np.ndarray:
    out = np.full((3, len(levels)), np.nan)
    for n, b in enumerate(levels):
        if b in intercepts:
            out[:, n] = intercepts[b], errors[b], bounded[b]
    return out


def _pair_probe(shared, task):
    ds, sched, levels, seed, requantize = shared
    k, (i, j) = task
    rng = _seeding.task_rng(seed, _seeding.PROBE_PAIR, k)
    js = joint_sample(ds, [i, j])
    cols = js.columns.copy()
    if js.size:
        cols[1] = rng.permutation(cols[1])
    smallest = min(sched.sizes(js.size)) if js.size else 0
    usable = [b for b in levels if b <= smallest]
    if not usable or js.size < 2:
        return _probe_row(levels, {}, {}, {})
    res = extrapolate_levels(cols, usable, sched, rng, requantize)
    bounded = {b: select_level(res, b).value_bits for b in usable}
    return _probe_row(levels, {b: r.intercept_bits for b, r in res.items()},
                      {b: r.error_bar_bits for b, r in res.items()}, bounded)


def _triplet_probe(shared, task):
    from .multiinfo import chain_extrapolations

    ds, sched, levels, seed, requantize = shared
    k, (i, j, l) = task
    rng = _seeding.task_rng(seed, _seeding.PROBE_TRIPLET, k)
    js = joint_sample(ds, [i, j, l])
    cols = js.columns.copy()
    if js.size:
        cols[1] = rng.permutation(cols[1])
        cols[2] = rng.permutation(cols[2])
    smallest = min(sched.sizes(js.size)) if js.size else 0
    usable = [b for b in levels if b * b <= smallest]
    if not usable or js.size < 2:
        return _probe_row(levels, {}, {}, {})
    outer, inner = chain_extrapolations(cols, (0, 1, 2), usable, sched,
                                        int(rng.integers(2 ** 63)), requantize)
    intercepts = {b: outer[b].intercept_bits + inner[b].intercept_bits for b in usable}
    errors = {b: math.hypot(outer[b].error_bar_bits, inner[b].error_bar_bits) for b in usable}
    bounded = {b: select_level(outer, b).value_bits + select_level(inner, b).value_bits
               for b in usable}
    return _probe_row(levels, intercepts, errors, bounded)


def _stats(values, errors=None) -> LevelStats:
    ok = np.isfinite(values)
    v = values[ok]
    return LevelStats(
        float(v.mean()) if v.size else math.nan,
        float(v.std(ddof=1)) if v.size > 1 else math.nan,
        int(v.size),
        float(errors[ok].mean()) if errors is not None and v.size else math.nan)


def _calibrate(ds: Dataset, r: int, b_max: int, n_probes: int, sched, rng,
               tolerance_bits: float, n_jobs, requantize, rule) -> CalibrationReport:
    if b_max < 2:
        raise ValueError(f"b_max must be at least 2, got {b_max}")
    if n_probes < MIN_PROBES:
        raise BelowMinimumProbesError(
            f"at least {MIN_PROBES} probes are required, got {n_probes}")
    if rule not in ZERO_RULES:
        raise ValueError(f"rule must be one of {ZERO_RULES}")
    if ds.n_vars < r:
        raise ValueError(f"need at least {r} variables to calibrate")
    seed = _seeding.base_entropy(rng)
    tag = _seeding.PROBE_PAIR if r == 2 else _seeding.PROBE_TRIPLET
    tuples = sample_tuples(ds.n_vars, r, n_probes, _seeding.task_rng(seed, tag))
    levels = list(range(2, b_max + 1))
    probe = _pair_probe if r == 2 else _triplet_probe
    rows = parallel_map(probe, list(enumerate(tuples)),
                        (ds, sched, levels, seed, requantize), n_jobs)
    values = np.array(rows).reshape(len(tuples), 3, len(levels))
    per_level, per_bound, intercepts = {}, {}, {}
    for n, b in enumerate(levels):
        per_level[b] = _stats(values[:, 0, n], values[:, 1, n])
        per_bound[b] = _stats(values[:, 2, n])
        col = values[:, 0, n]
        intercepts[b] = col[np.isfinite(col)]
    b_star = critical_level(per_level, tolerance_bits, rule)
    report = CalibrationReport(per_level, b_star, tolerance_bits,
                               "pairs" if r == 2 else "triplets", len(tuples),
                               intercepts, per_bound, rule)
    if b_star is None:
        raise CalibrationError(
            "no quantization level extrapolates shuffled data to zero; "
            "lower b_max or use more samples", report)
    return report


def determine_bstar(ds: Dataset, b_max: int = 10, n_probe_pairs: int = 1000,
                    sched: SubsampleSchedule = DEFAULT_SCHEDULE, rng=0,
                    tolerance_bits: float = 0.01, n_jobs: int | None = 1,
                    requantize: bool = True, rule: str = "errorbar") -> CalibrationReport:
    """Calibrate ``b_star`` on randomly drawn pairs with one member shuffled.

    Raises :class:`CalibrationError` (carrying the report) when no level
    passes.
    """
    return _calibrate(ds, 2, b_max, n_probe_pairs, sched, rng, tolerance_bits,
                      n_jobs, requantize, rule)


def triplet_bstar(ds: Dataset, b_max: int = 6, n_probe_triplets: int = 1000,
                  sched: SubsampleSchedule = DEFAULT_SCHEDULE, rng=0,
                  tolerance_bits: float = 0.01, n_jobs: int | None = 1,
                  requantize: bool = True, rule: str = "errorbar") -> CalibrationReport:
    """As :func:`determine_bstar` for triplets with two members shuffled.

    Each probe is the chain-rule triplet information at a fixed level, so
    the ``b x b**2`` table sets the sample-size limit.
    """
    return _calibrate(ds, 3, b_max, n_probe_triplets, sched, rng, tolerance_bits,
                      n_jobs, requantize, rule)
