"""Scikit-learn style wrappers around the quantizer and the pairwise pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_level, check_samples
from .calibrate import determine_bstar
from .engine import BatchConfig, estimate_all_pairs
from .ingest import Dataset
from .quantize import rank_symbols


class EqualPopulationQuantizer(TransformerMixin, BaseEstimator):
    """Map every feature to ``n_levels`` equally populated integer symbols.

    Parameters
    ----------
    n_levels : int, default=3
        Number of symbols per feature.

    Attributes
    ----------
    sorted_ : ndarray of shape (n_samples_fit, n_features)
        Training values, sorted per feature. New values are ranked against them.
    n_features_in_ : int

    Notes
    -----
    ``fit_transform`` ranks ties by position and is therefore exactly equal
    population. ``transform`` on new data ranks each value by the number of
    training values strictly below it, which agrees with ``fit_transform``
    on tie-free training data.

    Examples
    --------
    >>> import numpy as np
    >>> EqualPopulationQuantizer(n_levels=2).fit_transform(np.arange(4.0)[:, None]).ravel()
    array([0, 0, 1, 1])
    """

    def __init__(self, n_levels=3):
        self.n_levels = n_levels

    def fit(self, X, y=None):
        X = check_samples(X, allow_nan=False)
        b = check_level(self.n_levels)
        if b > X.shape[0]:
            raise ValueError(f"n_levels={b} exceeds the {X.shape[0]} training samples")
        self.sorted_ = np.sort(X, axis=0, kind="stable")
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X)
        X = check_samples(X, allow_nan=False)
        return rank_symbols(X.T, self.n_levels).T

    def transform(self, X):
        check_is_fitted(self, "sorted_")
        X = check_samples(X, allow_nan=False)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        n = self.sorted_.shape[0]
        out = np.empty(X.shape, dtype=np.int64)
        for k in range(X.shape[1]):
            pos = np.searchsorted(self.sorted_[:, k], X[:, k], side="left")
            out[:, k] = np.minimum(pos, n - 1) * self.n_levels // n
        return out


class DirectMutualInformation(BaseEstimator):
    """Pairwise mutual information between all features, bias-corrected.

    Each pair is quantized at levels ``2..b_star``, its plug-in MI is
    extrapolated to infinite sample size from random subsamples, and the
    finest level that still gives a significant gain is kept. ``b_star`` is
    calibrated on shuffled feature pairs unless given.

    Parameters
    ----------
    b_star : int or None, default=None
        Level cap. ``None`` calibrates it during ``fit``.
    b_max : int, default=10
        Highest level tried by the calibration.
    n_probes : int, default=1000
        Shuffled pairs used by the calibration.
    tolerance_bits : float, default=0.01
    f1, f3 : float, default=0.7, 0.9
        Smallest and largest subsample fractions.
    t1 : int, default=21
        Trials at the smallest fraction.
    min_joint_samples : int, default=200
        Pairs with fewer jointly observed samples are left undefined.
    random_state : int, default=0
    n_jobs : int or None, default=1
        Worker processes; ``None`` or ``-1`` uses every core. Results do
        not depend on it.

    Attributes
    ----------
    mi_ : ndarray of shape (n_features, n_features)
        Symmetric MI in bits; NaN on the diagonal and for skipped pairs.
    matrix_ : MIMatrix
        ``mi_`` plus chosen levels, error bars and joint sample sizes.
    b_star_ : int
    calibration_ : CalibrationReport or None
        None when ``b_star`` was supplied.
    n_features_in_ : int
    """

    def __init__(self, b_star=None, b_max=10, n_probes=1000, tolerance_bits=0.01,
                 f1=0.7, f3=0.9, t1=21, min_joint_samples=200, random_state=0, n_jobs=1):
        self.b_star = b_star
        self.b_max = b_max
        self.n_probes = n_probes
        self.tolerance_bits = tolerance_bits
        self.f1 = f1
        self.f3 = f3
        self.t1 = t1
        self.min_joint_samples = min_joint_samples
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> BatchConfig:
        return BatchConfig(f1=self.f1, f3=self.f3, t1=self.t1, b_max=self.b_max,
                           tolerance_bits=self.tolerance_bits,
                           min_joint_samples=self.min_joint_samples,
                           seed=int(self.random_state), worker_count=self.n_jobs,
                           n_probe_pairs=self.n_probes)

    def fit(self, X, y=None):
        """Estimate MI for every pair of columns of ``X``; NaN marks missing values."""
        X = check_samples(X, min_features=2)
        cfg = self._config()
        ds = Dataset.from_array(X.T)
        if self.b_star is None:
            self.calibration_ = determine_bstar(
                ds, cfg.b_max, cfg.n_probe_pairs, cfg.schedule, cfg.seed,
                cfg.tolerance_bits, cfg.worker_count)
            self.b_star_ = self.calibration_.b_star
        else:
            self.calibration_ = None
            self.b_star_ = check_level(self.b_star, "b_star")
        self.matrix_ = estimate_all_pairs(ds, cfg, self.b_star_)
        self.mi_ = self.matrix_.values
        self.n_features_in_ = X.shape[1]
        return self
