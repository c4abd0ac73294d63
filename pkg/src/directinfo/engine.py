"""Batch estimation over many pairs and triplets.

Every task draws its random numbers from ``(seed, task kind, variable ids)``
so outputs are bit-identical for any worker count.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _seeding
from ._parallel import parallel_map
from .calibrate import CalibrationReport, MIEstimate, sample_tuples, select_level
from .exceptions import (
    BudgetExceededError,
    DirectInfoError,
    InsufficientJointError,
    InsufficientSampleError,
)
from .extrapolate import SubsampleSchedule, extrapolate_levels, make_schedule
from .ingest import Dataset, joint_sample
from .multiinfo import TripletEstimate, consistency_check, estimate_triplet


@dataclass
class BatchConfig:
    f1: float = 0.7
    f3: float = 0.9
    t1: int = 21
    include_full: bool = True
    b_max: int = 10
    triplet_b_max: int = 6
    tolerance_bits: float = 0.01
    min_joint_samples: int = 200
    seed: int = 0
    worker_count: int = 1
    n_probe_pairs: int = 1000
    n_probe_triplets: int = 1000
    n_baseline: int = 10_000
    triplet_budget: int = 5_000
    requantize: bool = True

    @property
    def schedule(self) -> SubsampleSchedule:
        return make_schedule(self.f1, self.f3, self.t1, self.include_full)

    def to_dict(self) -> dict:
        return asdict(self)


def _b_star(calib) -> int:
    b = calib.b_star if isinstance(calib, CalibrationReport) else calib
    if b is None:
        raise ValueError("calibration has no defined b_star")
    b = int(b)
    if b < 2:
        raise ValueError("b_star must be at least 2")
    return b


def _estimate_columns(cols, b_star: int, sched, seed: int, requantize: bool) -> MIEstimate:
    """Full pairwise pipeline on one joint sample: levels 2..b_star, then selection."""
    n = cols.shape[1]
    if min(sched.sizes(n)) < b_star:
        raise InsufficientSampleError(
            f"joint sample of {n} is too small for {b_star} levels")
    per_b = extrapolate_levels(cols, range(2, b_star + 1), sched,
                               _seeding.task_rng(seed), requantize)
    return select_level(per_b, b_star)


# ----------------------------------------------------------------------------
# all pairs
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class MIMatrix:
    """Symmetric pairwise MI with per-pair metadata.

    Undefined entries (diagonal, skipped pairs) are NaN in ``values`` and
    ``error_bars`` and 0 in ``chosen_b``.
    """

    names: tuple
    values: np.ndarray
    chosen_b: np.ndarray
    error_bars: np.ndarray
    n_joint: np.ndarray
    skipped: list = field(default_factory=list)
    b_star: int = 0

    @classmethod
    def empty(cls, names, b_star=0) -> "MIMatrix":
        n = len(names)
        return cls(tuple(names), np.full((n, n), np.nan), np.zeros((n, n), dtype=int),
                   np.full((n, n), np.nan), np.zeros((n, n), dtype=int), [], b_star)

    def set(self, i, j, value, chosen_b, error_bar, n_joint):
        for a, b in ((i, j), (j, i)):
            self.values[a, b] = value
            self.chosen_b[a, b] = chosen_b
            self.error_bars[a, b] = error_bar
            self.n_joint[a, b] = n_joint

    def pairs(self):
        """Estimated pairs ``(i, j)`` with ``i < j``."""
        iu, ju = np.triu_indices(len(self.names), k=1)
        ok = np.isfinite(self.values[iu, ju])
        return list(zip(iu[ok].tolist(), ju[ok].tolist()))

    def estimated_values(self) -> np.ndarray:
        iu, ju = np.triu_indices(len(self.names), k=1)
        v = self.values[iu, ju]
        return v[np.isfinite(v)]

    def estimate(self, i, j) -> MIEstimate:
        return MIEstimate(float(self.values[i, j]), int(self.chosen_b[i, j]),
                          float(self.error_bars[i, j]), {}, int(self.n_joint[i, j]))

    def identical(self, other: "MIMatrix") -> bool:
        return (self.names == other.names
                and np.array_equal(self.values, other.values, equal_nan=True)
                and np.array_equal(self.chosen_b, other.chosen_b)
                and np.array_equal(self.error_bars, other.error_bars, equal_nan=True)
                and np.array_equal(self.n_joint, other.n_joint)
                and self.skipped == other.skipped)

    def sidecar(self) -> dict:
        pairs = []
        for i, j in self.pairs():
            pairs.append({"a": self.names[i], "b": self.names[j],
                          "value_bits": float(self.values[i, j]),
                          "chosen_b": int(self.chosen_b[i, j]),
                          "error_bar_bits": float(self.error_bars[i, j]),
                          "n_joint": int(self.n_joint[i, j])})
        skipped = [{"a": self.names[i], "b": self.names[j], "reason": r, "n_joint": n}
                   for i, j, r, n in self.skipped]
        return {"names": list(self.names), "b_star": self.b_star,
                "pairs": pairs, "skipped": skipped}


INSUFFICIENT_JOINT = "InsufficientJoint"


def _pair_task(shared, pair):
    ds, sched, b_star, seed, min_joint, requantize = shared
    i, j = pair
    js = joint_sample(ds, [i, j])
    if js.size < max(min_joint, 2):
        return i, j, INSUFFICIENT_JOINT, js.size, None
    try:
        est = _estimate_columns(js.columns, b_star, sched,
                                _task_seed(seed, _seeding.PAIR, i, j), requantize)
    except DirectInfoError as exc:
        return i, j, type(exc).__name__, js.size, None
    return i, j, None, js.size, (est.value_bits, est.chosen_b, est.error_bar_bits)


def _task_seed(seed: int, *key) -> int:
    return int(_seeding.task_rng(seed, *key).integers(2 ** 63))


def estimate_pair(ds: Dataset, i: int, j: int, cfg: BatchConfig, calib) -> MIEstimate:
    """One pair, with the same seed and result as in :func:`estimate_all_pairs`."""
    if i == j:
        raise ValueError("a pair needs two distinct variables")
    i, j = min(i, j), max(i, j)
    js = joint_sample(ds, [i, j])
    if js.size < max(cfg.min_joint_samples, 2):
        raise InsufficientJointError(
            f"{js.size} joint observations, {cfg.min_joint_samples} required")
    est = _estimate_columns(js.columns, _b_star(calib), cfg.schedule,
                            _task_seed(cfg.seed, _seeding.PAIR, i, j), cfg.requantize)
    return MIEstimate(est.value_bits, est.chosen_b, est.error_bar_bits, est.per_b, js.size)


def _fill_matrix(names, b_star, results) -> MIMatrix:
    m = MIMatrix.empty(names, b_star)
    for i, j, reason, n, est in results:
        if reason is not None:
            m.skipped.append((i, j, reason, n))
            m.n_joint[i, j] = m.n_joint[j, i] = n
        else:
            m.set(i, j, est[0], est[1], est[2], n)
    return m


def estimate_all_pairs(ds: Dataset, cfg: BatchConfig, calib,
                       pairs: Sequence[tuple] | None = None) -> MIMatrix:
    """Estimate MI for every unordered pair (or the given ``pairs``).

    Pairs with fewer than ``cfg.min_joint_samples`` jointly observed values
    are skipped with reason ``InsufficientJoint``.
    """
    b_star = _b_star(calib)
    if pairs is None:
        pairs = list(itertools.combinations(range(ds.n_vars), 2))
    shared = (ds, cfg.schedule, b_star, cfg.seed, cfg.min_joint_samples, cfg.requantize)
    results = parallel_map(_pair_task, pairs, shared, cfg.worker_count)
    return _fill_matrix(ds.names, b_star, results)


# ----------------------------------------------------------------------------
# verification runs
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class ShuffleSummary:
    values: np.ndarray
    error_bars: np.ndarray
    chosen_b: np.ndarray
    n_skipped: int = 0

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean_bits(self) -> float:
        return float(self.values.mean()) if self.n else math.nan

    @property
    def std_bits(self) -> float:
        return float(self.values.std(ddof=1)) if self.n > 1 else math.nan

    @property
    def sem_bits(self) -> float:
        return self.std_bits / math.sqrt(self.n) if self.n > 1 else math.nan

    @property
    def fraction_beyond_3_error_bars(self) -> float:
        if not self.n:
            return math.nan
        return float(np.mean(np.abs(self.values) > 3.0 * self.error_bars))

    def to_dict(self) -> dict:
        return {"n": self.n, "n_skipped": self.n_skipped, "mean_bits": self.mean_bits,
                "std_bits": self.std_bits, "sem_bits": self.sem_bits,
                "fraction_beyond_3_error_bars": self.fraction_beyond_3_error_bars,
                "values": self.values.tolist(), "error_bars": self.error_bars.tolist()}


def _shuffled_task(shared, task):
    ds, sched, b_star, seed, min_joint, requantize = shared
    k, (i, j) = task
    rng = _seeding.task_rng(seed, _seeding.SHUFFLE, k)
    js = joint_sample(ds, [i, j])
    if js.size < max(min_joint, 2):
        return None
    cols = js.columns.copy()
    cols[1] = rng.permutation(cols[1])
    try:
        est = _estimate_columns(cols, b_star, sched, int(rng.integers(2 ** 63)), requantize)
    except DirectInfoError:
        return None
    return est.value_bits, est.error_bar_bits, est.chosen_b


def verify_shuffled(ds: Dataset, cfg: BatchConfig, calib, n_pairs: int,
                    rng=None) -> ShuffleSummary:
    """Run the full pipeline on ``n_pairs`` random pairs with one member shuffled.

    With a valid ``b_star`` the estimates should scatter around zero.
    """
    b_star = _b_star(calib)
    if n_pairs <= 0:
        return ShuffleSummary(np.array([]), np.array([]), np.array([], dtype=int))
    seed = cfg.seed if rng is None else _seeding.base_entropy(rng)
    tuples = sample_tuples(ds.n_vars, 2, n_pairs, _seeding.task_rng(seed, _seeding.SHUFFLE))
    shared = (ds, cfg.schedule, b_star, seed, cfg.min_joint_samples, cfg.requantize)
    results = parallel_map(_shuffled_task, list(enumerate(tuples)), shared, cfg.worker_count)
    ok = [r for r in results if r is not None]
    arr = np.array(ok, dtype=float).reshape(-1, 3)
    return ShuffleSummary(arr[:, 0], arr[:, 1], arr[:, 2].astype(int),
                          len(results) - len(ok))


@dataclass(eq=False)
class StabilitySummary:
    """Differences (reduced-sample minus full-sample) per re-estimated pair."""

    pairs: list
    differences: np.ndarray
    n_excluded: int
    fraction: float
    threshold_bits: float = 0.1

    @property
    def share_above_threshold(self) -> float:
        if not len(self.differences):
            return math.nan
        return float(np.mean(np.abs(self.differences) > self.threshold_bits))

    def histogram(self, bins: int = 41, limit: float = 0.5):
        edges = np.linspace(-limit, limit, bins + 1)
        clipped = np.clip(self.differences, -limit, limit)
        counts, _ = np.histogram(clipped, bins=edges)
        return edges, counts

    def to_dict(self) -> dict:
        edges, counts = self.histogram()
        return {"fraction": self.fraction, "n": len(self.differences),
                "n_excluded": self.n_excluded, "threshold_bits": self.threshold_bits,
                "share_above_threshold": self.share_above_threshold,
                "histogram": {"edges": edges.tolist(), "counts": counts.tolist()},
                "differences": self.differences.tolist()}


def _subsample_task(shared, pair):
    ds, sched, b_star, seed, draw_seed, fraction, requantize = shared
    i, j = pair
    js = joint_sample(ds, [i, j])
    rng = _seeding.task_rng(draw_seed, _seeding.SUBSAMPLE, i, j)
    m = int(math.floor(fraction * js.size + 1e-9))
    # keep observation order so fraction=1 reproduces the full-sample estimate
    keep = np.sort(rng.permutation(js.size)[:m])
    if m < 2 or min(sched.sizes(m)) < b_star:
        return None
    try:
        est = _estimate_columns(js.columns[:, keep], b_star, sched,
                                _task_seed(seed, _seeding.PAIR, i, j), requantize)
    except DirectInfoError:
        return None
    return est.value_bits


def verify_subsample_stability(ds: Dataset, cfg: BatchConfig, calib,
                               fraction: float = 2.0 / 3.0, rng=None,
                               reference: MIMatrix | None = None,
                               threshold_bits: float = 0.1) -> StabilitySummary:
    """Re-estimate every estimated pair on a random ``fraction`` of its joint sample.

    ``rng`` only picks the retained observations; the estimation itself
    reuses the per-pair seeds of :func:`estimate_all_pairs`, so
    ``fraction=1`` reproduces the reference exactly.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    b_star = _b_star(calib)
    if reference is None:
        reference = estimate_all_pairs(ds, cfg, b_star)
    draw_seed = cfg.seed if rng is None else _seeding.base_entropy(rng)
    pairs = reference.pairs()
    shared = (ds, cfg.schedule, b_star, cfg.seed, draw_seed, fraction, cfg.requantize)
    results = parallel_map(_subsample_task, pairs, shared, cfg.worker_count)
    kept, diffs = [], []
    for (i, j), r in zip(pairs, results):
        if r is None:
            continue
        kept.append((i, j))
        diffs.append(r - reference.values[i, j])
    return StabilitySummary(kept, np.array(diffs), len(pairs) - len(kept),
                            fraction, threshold_bits)


# ----------------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------------


@dataclass(eq=False)
class SortedMatrix:
    order: list
    names: list
    groups: list
    boundaries: list
    threshold_bits: float
    rendered: np.ndarray


UNLABELED = "(unlabeled)"


def sorted_matrix(m: MIMatrix, labels: Mapping) -> SortedMatrix:
    """Group variables by label and order each group by mean in-group MI.

    ``labels`` maps variable name or index to a group label. Groups appear
    in order of their first member; unlabeled variables form a trailing
    group. Rendered entries below the mean over estimated pairs are zero.
    """
    n = len(m.names)
    lab = []
    for k, name in enumerate(m.names):
        if name in labels:
            lab.append(labels[name])
        elif k in labels:
            lab.append(labels[k])
        else:
            lab.append(None)
    groups = []
    for g in lab:
        if g is not None and g not in groups:
            groups.append(g)
    if any(g is None for g in lab):
        groups.append(None)

    values = m.values
    order, boundaries = [], []
    for g in groups:
        members = [k for k in range(n) if lab[k] == g]
        if len(members) > 1:
            sub = values[np.ix_(members, members)]
            with np.errstate(invalid="ignore"):
                means = np.array([np.nanmean(np.where(np.isfinite(r), r, np.nan))
                                  if np.isfinite(r).any() else -np.inf
                                  for r in sub])
        else:
            means = np.zeros(len(members))
        # stable sort on the negated mean keeps input order among ties
        ranked = [members[k] for k in np.argsort(-means, kind="stable")]
        order.extend(ranked)
        boundaries.append(len(order))

    est = m.estimated_values()
    threshold = float(est.mean()) if est.size else math.nan
    reordered = values[np.ix_(order, order)]
    rendered = np.where(np.isfinite(reordered) & (reordered >= threshold), reordered, 0.0)
    return SortedMatrix(order, [m.names[k] for k in order],
                        [UNLABELED if g is None else g for g in groups],
                        boundaries, threshold, rendered)


# ----------------------------------------------------------------------------
# triplets and groups
# ----------------------------------------------------------------------------


def _triplet_task(shared, ids):
    ds, sched, b_star_t, seed, min_joint, requantize = shared
    i, j, k = ids
    js = joint_sample(ds, [i, j, k])
    if js.size < max(min_joint, 2):
        return ids, INSUFFICIENT_JOINT
    try:
        return ids, estimate_triplet(js.columns, b_star_t, sched, b_star_t,
                                     _task_seed(seed, _seeding.TRIPLET, i, j, k),
                                     requantize, ids)
    except (InsufficientSampleError, ValueError) as exc:
        return ids, type(exc).__name__


def _ids(ds: Dataset, members) -> list[int]:
    return [ds.index_of(m) if isinstance(m, str) else int(m) for m in members]


def estimate_triplets(ds: Dataset, triplets: Sequence[tuple], cfg: BatchConfig,
                      calib_triplet) -> tuple[list[TripletEstimate], list]:
    """Estimate the given triplets; returns ``(estimates, failures)``."""
    b_star_t = _b_star(calib_triplet)
    shared = (ds, cfg.schedule, b_star_t, cfg.seed, cfg.min_joint_samples, cfg.requantize)
    results = parallel_map(_triplet_task, [tuple(t) for t in triplets], shared,
                           cfg.worker_count)
    good = [r for _, r in results if isinstance(r, TripletEstimate)]
    bad = [(ids, r) for ids, r in results if not isinstance(r, TripletEstimate)]
    return good, bad


def estimate_group_triplets(ds: Dataset, group, cfg: BatchConfig,
                            calib_triplet) -> list[TripletEstimate]:
    """All ``C(g, 3)`` triplets of a group of variables (names or indices).

    Triplets whose joint sample is too small are left out.
    """
    ids = sorted(set(_ids(ds, group)))
    count = math.comb(len(ids), 3)
    if count > cfg.triplet_budget:
        raise BudgetExceededError(
            f"group of {len(ids)} variables has {count} triplets, "
            f"budget is {cfg.triplet_budget}", count)
    triplets = list(itertools.combinations(ids, 3))
    good, _ = estimate_triplets(ds, triplets, cfg, calib_triplet)
    return good


def nonspecific_pairs(ds: Dataset, cfg: BatchConfig, calib, count: int | None = None) -> np.ndarray:
    """MI of randomly drawn (unshuffled) pairs from the whole dataset."""
    count = cfg.n_baseline if count is None else count
    tuples = sample_tuples(ds.n_vars, 2, count, _seeding.task_rng(cfg.seed, _seeding.BASELINE, 2))
    m = estimate_all_pairs(ds, cfg, calib, pairs=sorted(set(tuples)))
    return np.array([m.values[i, j] for i, j in tuples if np.isfinite(m.values[i, j])])


def nonspecific_triplets(ds: Dataset, cfg: BatchConfig, calib_triplet,
                         count: int | None = None) -> np.ndarray:
    """Mean triplet information of randomly drawn triplets from the whole dataset."""
    count = cfg.n_baseline if count is None else count
    tuples = sample_tuples(ds.n_vars, 3, count, _seeding.task_rng(cfg.seed, _seeding.BASELINE, 3))
    good, _ = estimate_triplets(ds, sorted(set(tuples)), cfg, calib_triplet)
    return np.array([t.mean_bits for t in good])


@dataclass(frozen=True)
class GroupSummary:
    label: str
    members: tuple
    mean_triplet_bits: float
    mean_pair_bits: float
    exceedance_triplet: float
    exceedance_pair: float
    baseline_triplet_mean: float
    baseline_pair_mean: float
    n_triplets: int
    n_pairs: int

    def to_dict(self) -> dict:
        return asdict(self)


def exceedance(values, baseline) -> float:
    """Fraction of ``values`` strictly above the mean of ``baseline``."""
    baseline = np.asarray(baseline, dtype=float)
    if baseline.size == 0:
        raise ValueError("baseline is empty")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return math.nan
    return float(np.mean(values > baseline.mean()))


def group_summary(label, members, triplets, pairs, baseline_triplets,
                  baseline_pairs) -> GroupSummary:
    """Mean triplet information and exceedance probabilities for one group.

    ``triplets`` may be :class:`TripletEstimate` objects or plain values;
    ``pairs`` are the within-group pairwise MI values.
    """
    tvals = np.array([t.mean_bits if isinstance(t, TripletEstimate) else float(t)
                      for t in triplets], dtype=float)
    pvals = np.asarray(pairs, dtype=float)
    bt = np.asarray(baseline_triplets, dtype=float)
    bp = np.asarray(baseline_pairs, dtype=float)
    if bt.size == 0 or bp.size == 0:
        raise ValueError("baseline is empty")
    return GroupSummary(
        str(label), tuple(members),
        float(tvals.mean()) if tvals.size else math.nan,
        float(pvals.mean()) if pvals.size else math.nan,
        exceedance(tvals, bt), exceedance(pvals, bp),
        float(bt.mean()), float(bp.mean()), int(tvals.size), int(pvals.size))


def group_pair_values(m: MIMatrix, ids: Sequence[int]) -> np.ndarray:
    ids = sorted(ids)
    vals = [m.values[i, j] for i, j in itertools.combinations(ids, 2)]
    vals = np.array(vals, dtype=float)
    return vals[np.isfinite(vals)]


def triplet_consistency_rate(triplets: Sequence[TripletEstimate]) -> float:
    if not triplets:
        return math.nan
    return float(np.mean([consistency_check(t)[0] for t in triplets]))
