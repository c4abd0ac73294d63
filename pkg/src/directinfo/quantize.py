"""Adaptive equal-population quantization.

Values are replaced by the index of their rank-bin, so the result depends on
the ordering of the data only and is unchanged by any strictly increasing
transform. Ties are broken by position, which keeps bin occupancies equal
even for heavily tied data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_LEVELS = 2 ** 31 - 1


@dataclass(frozen=True, eq=False)
class QuantizedVector:
    """Integer symbols in ``[0, levels)``."""

    levels: int
    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.levels < 1:
            raise ValueError("levels must be positive")
        if symbols.size and (symbols.min() < 0 or symbols.max() >= self.levels):
            raise ValueError(f"symbols must lie in [0, {self.levels})")
        object.__setattr__(self, "symbols", symbols)

    def __len__(self):
        return len(self.symbols)

    def occupancy(self) -> np.ndarray:
        return np.bincount(self.symbols, minlength=self.levels)


def _check_levels(n: int, b: int) -> None:
    if b < 1:
        raise ValueError(f"number of levels must be >= 1, got {b}")
    if b > n:
        raise ValueError(f"cannot make {b} equally populated bins from {n} values")


def rank_symbols(x, b: int) -> np.ndarray:
    """Symbols ``floor(rank * b / N)`` for each row of ``x`` (last axis).

    ``x`` may be 1-D or 2-D; the rank is taken along the last axis with
    ties broken by position.
    """
    x = np.asarray(x)
    n = x.shape[-1]
    _check_levels(n, b)
    order = np.argsort(x, axis=-1, kind="stable")
    bins = (np.arange(n, dtype=np.int64) * b) // n
    symbols = np.empty(x.shape, dtype=np.int64)
    if x.ndim == 1:
        symbols[order] = bins
    else:
        np.put_along_axis(symbols, order, np.broadcast_to(bins, x.shape), axis=-1)
    return symbols


def equal_population_quantize(x, b: int) -> QuantizedVector:
    """Quantize ``x`` into ``b`` equally populated levels.

    Examples
    --------
    >>> equal_population_quantize([10, 20, 30, 40, 50, 60], 3).symbols
    array([0, 0, 1, 1, 2, 2])
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("x must be finite")
    return QuantizedVector(int(b), rank_symbols(x, int(b)))


def passthrough(symbols, b: int) -> QuantizedVector:
    """Wrap already-discrete data (e.g. ratings) without re-binning."""
    symbols = np.asarray(symbols)
    if symbols.size and not np.all(symbols == np.round(symbols)):
        raise ValueError("pre-quantized data must be integer valued")
    symbols = symbols.astype(np.int64)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= b):
        raise ValueError(f"pre-quantized symbols must lie in [0, {b})")
    return QuantizedVector(int(b), symbols)


def combine(q1: QuantizedVector, q2: QuantizedVector) -> QuantizedVector:
    """Product-alphabet variable with symbol ``s1 * b2 + s2``."""
    if len(q1) != len(q2):
        raise ValueError(f"length mismatch: {len(q1)} vs {len(q2)}")
    levels = q1.levels * q2.levels
    if levels > MAX_LEVELS:
        raise OverflowError(f"combined alphabet of {levels} levels is too large")
    return QuantizedVector(levels, q1.symbols * q2.levels + q2.symbols)
