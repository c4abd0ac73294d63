"""Pearson correlation and its Gaussian mutual-information counterpart."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DirectInfoError, DivergentError, ZeroVarianceError
from .ingest import Dataset, joint_sample


@dataclass(frozen=True)
class PcMiPoint:
    pair: tuple
    pc: float
    mi_bits: float
    gaussian_mi_bits: float
    n_joint: int
    error: str | None = None


def pearson(u, v) -> float:
    """Sample correlation coefficient (population-normalized moments)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("u and v must be vectors of equal length")
    if u.size < 2:
        raise ValueError("need at least two observations")
    du = u - u.mean()
    dv = v - v.mean()
    suu = math.fsum((du * du).tolist())
    svv = math.fsum((dv * dv).tolist())
    if suu <= 0 or svv <= 0:
        raise ZeroVarianceError("correlation is undefined for a constant vector")
    r = math.fsum((du * dv).tolist()) / math.sqrt(suu * svv)
    if abs(r) > 1.0:
        if abs(r) > 1.0 + 1e-12:
            raise ArithmeticError(f"correlation {r} outside [-1, 1]")
        r = math.copysign(1.0, r)
    return r


def gaussian_mi(pc: float) -> float:
    """Mutual information of a bivariate Gaussian with correlation ``pc``, in bits."""
    if not -1.0 < pc < 1.0:
        raise DivergentError(f"|pc| must be below 1, got {pc}")
    return -0.5 * math.log2(1.0 - pc * pc)


def compare_report(estimates, ds: Dataset) -> list[PcMiPoint]:
    """Pair each MI estimate with the correlation on the same joint sample.

    ``estimates`` yields ``((i, j), MIEstimate)``; failures in the
    correlation are recorded on the point rather than raised.
    """
    points = []
    for pair, est in sorted(estimates, key=lambda kv: tuple(kv[0])):
        i, j = pair
        js = joint_sample(ds, [i, j])
        try:
            pc = pearson(js.columns[0], js.columns[1])
            gmi = gaussian_mi(pc) if abs(pc) < 1 else math.inf
            points.append(PcMiPoint((i, j), pc, est.value_bits, gmi, js.size))
        except (DirectInfoError, ValueError) as exc:
            points.append(PcMiPoint((i, j), math.nan, est.value_bits, math.nan,
                                    js.size, type(exc).__name__))
    return points
