"""Input checks shared by the estimator classes."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array


def check_samples(X, allow_nan: bool = True, min_features: int = 1) -> np.ndarray:
    """Validate an ``(n_samples, n_features)`` float array.

    NaN marks a missing value when ``allow_nan`` is true; infinities are
    always rejected.
    """
    return check_array(X, dtype=np.float64,
                       ensure_all_finite="allow-nan" if allow_nan else True,
                       ensure_min_samples=2, ensure_min_features=min_features)


def check_level(b, name: str = "n_levels", minimum: int = 2) -> int:
    """Integer quantization level of at least ``minimum``."""
    if isinstance(b, bool) or not isinstance(b, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {b!r}")
    if b < minimum:
        raise ValueError(f"{name} must be at least {minimum}, got {b}")
    return int(b)
