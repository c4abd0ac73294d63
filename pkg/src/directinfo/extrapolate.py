"""Subsample schedules and extrapolation of naive MI to infinite sample size.

Naive estimates obtained on random subsamples of size ``N' = floor(f N)``
follow ``I(N') = I_inf + A / N'`` in the asymptotic regime. Regressing the
trial estimates on ``1 / N'`` gives the bias-corrected intercept ``I_inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DegenerateFitError, InsufficientSampleError
from .plugin import batch_plugin_mi, xlogx_table
from .quantize import MAX_LEVELS


@dataclass(frozen=True)
class SubsampleSchedule:
    """Subsample fractions, trials per fraction, and whether to add the full sample."""

    fractions: tuple
    trials: tuple
    include_full: bool = True

    def __post_init__(self):
        fractions = tuple(float(f) for f in self.fractions)
        trials = tuple(int(t) for t in self.trials)
        if not fractions or len(fractions) != len(trials):
            raise ValueError("need one trial count per fraction")
        if any(not 0 < f <= 1 for f in fractions):
            raise ValueError("fractions must lie in (0, 1]")
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValueError("fractions must be strictly increasing")
        if any(t < 1 for t in trials):
            raise ValueError("trial counts must be positive")
        object.__setattr__(self, "fractions", fractions)
        object.__setattr__(self, "trials", trials)

    @property
    def n_points(self) -> int:
        return sum(self.trials) + int(self.include_full)

    def sizes(self, n: int) -> list[int]:
        """Subsample size for each fraction given ``n`` observations."""
        # the epsilon keeps e.g. 0.7 * 1000 from flooring to 699
        return [int(math.floor(f * n + 1e-9)) for f in self.fractions]


def make_schedule(f1: float = 0.7, f3: float = 0.9, t1: int = 21,
                  include_full: bool = True) -> SubsampleSchedule:
    """Three fractions equally spaced in ``1/f`` with ``t(f) ~ 1/f**2`` trials.

    >>> s = make_schedule(0.7, 0.9, 21)
    >>> s.fractions, s.trials, s.n_points
    ((0.7, 0.7875, 0.9), (21, 16, 12), 50)
    """
    if not 0 < f1 < f3 <= 1:
        raise ValueError(f"need 0 < f1 < f3 <= 1, got f1={f1}, f3={f3}")
    if t1 < 2:
        raise ValueError(f"t1 must be at least 2, got {t1}")
    f2 = 2.0 * f1 * f3 / (f1 + f3)
    fractions = (f1, f2, f3)
    trials = tuple(max(1, int(math.floor(t1 * (f1 / f) ** 2 + 1e-9)))
                   for f in fractions)
    return SubsampleSchedule(fractions, trials, include_full)


DEFAULT_SCHEDULE = make_schedule()


@dataclass(frozen=True, eq=False)
class ExtrapolationResult:
    """Trial points and the fitted line ``I = intercept + slope / N'``.

    ``points[:, 0]`` holds inverse subsample sizes, ``points[:, 1]`` the
    naive MI of each trial in bits.
    """

    levels: tuple
    points: np.ndarray
    intercept_bits: float
    slope_bits_samples: float
    error_bar_bits: float
    n: int = 0

    @property
    def b(self) -> int:
        return self.levels[0]

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "intercept_bits": self.intercept_bits,
            "slope_bits_samples": self.slope_bits_samples,
            "error_bar_bits": self.error_bar_bits,
            "n": self.n,
            "points": self.points.tolist(),
        }


def fit_line(points) -> tuple[float, float]:
    """Ordinary least squares ``y = a + s x``; returns ``(a, s)``.

    >>> fit_line([(1, 1), (2, 2), (3, 3)])
    (0.0, 1.0)
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size < 2:
        raise DegenerateFitError("need at least two distinct x values")
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    slope = float(np.dot(dx, y - ym) / np.dot(dx, dx))
    return float(ym - slope * xm), slope


def result_from_points(points, levels=(0,), n: int = 0) -> ExtrapolationResult:
    """Fit injected ``(1/N', I)`` points; the error bar comes from the largest 1/N'."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise DegenerateFitError("no points to fit")
    if np.any(pts[:, 0] <= 0):
        raise ValueError("inverse sample sizes must be positive")
    intercept, slope = fit_line(pts)
    smallest = pts[pts[:, 0] == pts[:, 0].max(), 1]
    error_bar = float(np.std(smallest, ddof=1)) if len(smallest) > 1 else 0.0
    return ExtrapolationResult(tuple(int(v) for v in levels), pts, intercept,
                               slope, error_bar, n)


def _as_slots(xs) -> list[np.ndarray]:
    slots = []
    for x in xs:
        a = np.asarray(x)
        if a.ndim == 1:
            a = a[np.newaxis, :]
        if a.ndim != 2:
            raise ValueError("each slot must be a vector or a stack of vectors")
        slots.append(a)
    n = slots[0].shape[1]
    if any(s.shape[1] != n for s in slots):
        raise ValueError("all vectors must have equal length")
    return slots


def _ranks(slot: np.ndarray) -> list[np.ndarray]:
    """Stable ranks of each row of a ``(k, N)`` stack."""
    out = []
    for row in slot:
        rank = np.empty(row.size, dtype=np.int64)
        rank[np.argsort(row, kind="stable")] = np.arange(row.size)
        out.append(rank)
    return out


def _draws(rng, n: int, sched: SubsampleSchedule):
    """Index arrays, one ``(t_k, m_k)`` block per fraction, plus the full sample."""
    base = np.arange(n)
    blocks = []
    for m, t in zip(sched.sizes(n), sched.trials):
        perm = rng.permuted(np.broadcast_to(base, (t, n)), axis=1)
        blocks.append(perm[:, :m])
    if sched.include_full:
        blocks.append(base[np.newaxis, :])
    return blocks


def naive_estimates(xs, level_sets: Sequence[Sequence[int]], sched: SubsampleSchedule,
                    rng, requantize: bool = True, discrete: bool = False):
    """Naive MI for every trial of ``sched`` at each requested level assignment.

    Parameters
    ----------
    xs : sequence of two slots
        Each slot is a vector or an ``(k, N)`` stack whose quantized rows are
        combined into one product-alphabet variable.
    level_sets : sequence of ``(b_first, b_second)``
        Levels applied to every row of the first and second slot.
    requantize : bool
        Re-bin each drawn subsample (default) rather than binning the full
        sample once and subsampling the symbols.
    discrete : bool
        Inputs are already integer symbols in ``[0, b)``; no binning.

    Returns
    -------
    inv_sizes : ndarray, shape (n_points,)
    values : ndarray, shape (len(level_sets), n_points)
    """
    slots = _as_slots(xs)
    if len(slots) != 2:
        raise ValueError("exactly two slots are required")
    n = slots[0].shape[1]
    sizes = sched.sizes(n)
    smallest = min(sizes)
    for first, second in level_sets:
        for slot, b in zip(slots, (first, second)):
            alphabet = b ** slot.shape[0]
            if alphabet > MAX_LEVELS:
                raise OverflowError("combined alphabet too large")
            if smallest < alphabet:
                raise InsufficientSampleError(
                    f"subsample of {smallest} cannot populate {alphabet} levels")
    if discrete:
        for slot, b in zip(slots, level_sets[0]):
            if np.any(slot < 0) or np.any(slot >= b) or np.any(slot != np.round(slot)):
                raise ValueError(f"pre-quantized symbols must lie in [0, {b})")
    else:
        # ranks on the full sample; ties ordered by observation index
        full_ranks = [_ranks(slot) for slot in slots]

    rng = np.random.default_rng(rng)
    blocks = _draws(rng, n, sched)
    inv = np.concatenate([np.full(b.shape[0], 1.0 / b.shape[1]) for b in blocks])
    out = np.empty((len(level_sets), len(inv)))
    table = xlogx_table(n)
    col = 0
    for idx in blocks:
        t, m = idx.shape
        if discrete:
            sym = [slot[:, idx].astype(np.int64) for slot in slots]
        elif requantize and m < n:
            ranks = [[_subsample_ranks(r, idx) for r in fr] for fr in full_ranks]
        else:
            ranks = [[r[idx] for r in fr] for fr in full_ranks]
        denom = m if requantize else n
        for li, (first, second) in enumerate(level_sets):
            codes = []
            sizes_ab = []
            for si, b in enumerate((first, second)):
                rows = sym[si] if discrete else [r * b // denom for r in ranks[si]]
                code = rows[0]
                for row in rows[1:]:
                    code = code * b + row
                codes.append(code)
                sizes_ab.append(b ** slots[si].shape[0])
            la, lb = sizes_ab
            flat = (codes[0] * lb + codes[1]
                    + (np.arange(t) * (la * lb))[:, np.newaxis])
            counts = np.bincount(flat.ravel(), minlength=t * la * lb)
            out[li, col:col + t] = batch_plugin_mi(counts.reshape(t, la, lb), table)
        col += t
    return inv, out


def _subsample_ranks(full_rank: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Rank of each drawn element within its own subsample, without sorting.

    Marks the drawn full-sample ranks and counts marks at or below each one.
    """
    t, _ = idx.shape
    r = full_rank[idx]
    rows = np.arange(t)[:, np.newaxis]
    marks = np.zeros((t, full_rank.size), dtype=np.int32)
    marks[rows, r] = 1
    return np.cumsum(marks, axis=1)[rows, r] - 1


def _fit(inv, values, levels, n, n_smallest) -> ExtrapolationResult:
    if np.unique(inv).size < 2:
        raise DegenerateFitError("all subsample sizes are identical")
    intercept, slope = fit_line(np.column_stack([inv, values]))
    first = values[:n_smallest]
    error_bar = float(np.std(first, ddof=1)) if n_smallest > 1 else 0.0
    return ExtrapolationResult(tuple(levels), np.column_stack([inv, values]),
                               intercept, slope, error_bar, n)


def extrapolate_pair(xs, b_levels, sched: SubsampleSchedule = DEFAULT_SCHEDULE,
                     rng=None, requantize: bool = True,
                     discrete: bool = False) -> ExtrapolationResult:
    """Extrapolated MI between two slots at fixed levels.

    ``xs`` holds two slots; the second may be a stack of vectors that is
    combined into one variable after quantization (``b ** k`` levels).
    ``b_levels`` gives the per-variable level of each slot.
    """
    b_levels = tuple(int(b) for b in b_levels)
    if len(b_levels) != 2:
        raise ValueError("b_levels needs one entry per slot")
    inv, values = naive_estimates(xs, [b_levels], sched, rng, requantize, discrete)
    n = _as_slots(xs)[0].shape[1]
    return _fit(inv, values[0], b_levels, n, sched.trials[0])


def extrapolate_levels(xs, levels: Sequence[int], sched: SubsampleSchedule = DEFAULT_SCHEDULE,
                       rng=None, requantize: bool = True) -> dict[int, ExtrapolationResult]:
    """Extrapolate at each ``b`` in ``levels`` using one shared set of subsamples.

    Sharing the draws across levels makes the level-to-level increments
    paired comparisons and lets ranks be computed once per subsample.
    """
    levels = [int(b) for b in levels]
    inv, values = naive_estimates(xs, [(b, b) for b in levels], sched, rng, requantize)
    n = _as_slots(xs)[0].shape[1]
    return {b: _fit(inv, values[k], (b, b), n, sched.trials[0])
            for k, b in enumerate(levels)}


def min_sample_size(sched: SubsampleSchedule, alphabet: int) -> int:
    """Smallest N whose smallest subsample still holds ``alphabet`` observations."""
    n = alphabet
    while min(sched.sizes(n)) < alphabet:
        n += 1
    return n
