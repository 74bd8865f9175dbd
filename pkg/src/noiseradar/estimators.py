"""scikit-learn style wrappers around the detector family.

Inputs are stacks of IQ batches: either (n_batches, N, 4) or the flattened
(n_batches, 4 N) layout with rows ordered I1, Q1, I2, Q2 per sample.
Label 1 means target present.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError
from .montecarlo import nearest_rank_quantile
from .signal_model import Sign
from .vgamma import detector_law, vg_isf

THRESHOLD_EXACT, THRESHOLD_EMPIRICAL = "exact", "empirical"


def check_iq_batches(X, n: int | None = None) -> np.ndarray:
    """Validate and reshape to a float array of shape (n_batches, N, 4)."""
    arr = np.asarray(X)
    if arr.ndim == 2:
        arr = check_array(arr, dtype=float)
        if arr.shape[1] % 4:
            raise DomainError(f"flattened batches need 4N columns, got {arr.shape[1]}")
        arr = arr.reshape(arr.shape[0], -1, 4)
    elif arr.ndim == 3:
        arr = check_array(arr, dtype=float, allow_nd=True)
        if arr.shape[2] != 4:
            raise DomainError(f"expected (n_batches, N, 4), got shape {arr.shape}")
    else:
        raise DomainError(f"expected a 2-d or 3-d array, got {arr.ndim} dimensions")
    if arr.shape[1] == 0:
        raise DomainError("batches must contain at least one sample")
    if n is not None and arr.shape[1] != n:
        raise DomainError(f"fitted on N={n} samples per batch, got {arr.shape[1]}")
    return arr


def _sign(value) -> Sign:
    return Sign.parse(value)


class DetectorStatistics(TransformerMixin, BaseEstimator):
    """Map each batch to its sufficient statistics (P_tot, D_0) as sample means."""

    def __init__(self, sign="qtms"):
        self.sign = sign

    def fit(self, X, y=None):
        x = check_iq_batches(X)
        _sign(self.sign)
        self.n_samples_per_batch_ = x.shape[1]
        self.n_features_in_ = 4 * x.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_samples_per_batch_")
        x = check_iq_batches(X, self.n_samples_per_batch_)
        s = _sign(self.sign).value
        ptot = np.einsum("bni,bni->bn", x, x).mean(axis=1)
        corr = (x[..., 0] * x[..., 2] + s * x[..., 1] * x[..., 3]).mean(axis=1)
        return np.column_stack([ptot, corr])

    def get_feature_names_out(self, input_features=None):
        return np.array(["p_tot", "d0"], dtype=object)


class NeymanPearsonDetector(ClassifierMixin, BaseEstimator):
    """Threshold test on D_kappa = D_0 - kappa P_tot / 2 at a fixed false-alarm rate.

    With ``threshold="exact"`` the threshold is the (1 - pfa) quantile of
    the exact null law, so fitting only reads N from the data. With
    ``threshold="empirical"`` it is the nearest-rank quantile of the
    training batches labelled 0 (all batches if ``y`` is omitted).
    """

    def __init__(self, kappa=0.0, pfa=0.01, sign="qtms", threshold=THRESHOLD_EXACT):
        self.kappa = kappa
        self.pfa = pfa
        self.sign = sign
        self.threshold = threshold

    def _validate_params(self):
        if not 0 <= self.kappa < 1:
            raise DomainError(f"kappa must lie in [0, 1), got {self.kappa}")
        if not 0 < self.pfa < 1:
            raise DomainError(f"pfa must lie in (0, 1), got {self.pfa}")
        if self.threshold not in (THRESHOLD_EXACT, THRESHOLD_EMPIRICAL):
            raise DomainError(f"threshold must be 'exact' or 'empirical', got {self.threshold!r}")
        _sign(self.sign)

    def _statistic(self, x):
        s = _sign(self.sign).value
        ptot = np.einsum("bni,bni->bn", x, x).mean(axis=1)
        corr = (x[..., 0] * x[..., 2] + s * x[..., 1] * x[..., 3]).mean(axis=1)
        return corr - self.kappa * ptot / 2.0

    def fit(self, X, y=None):
        self._validate_params()
        x = check_iq_batches(X)
        n = x.shape[1]
        if self.threshold == THRESHOLD_EXACT:
            self.threshold_ = vg_isf(float(self.pfa), detector_law(0.0, float(self.kappa), n))
        else:
            null = x if y is None else x[np.asarray(y) == 0]
            if null.shape[0] == 0:
                raise DomainError("empirical threshold needs batches labelled 0")
            stats = np.sort(self._statistic(null))
            self.threshold_ = nearest_rank_quantile(stats, 1.0 - float(self.pfa))
        self.n_samples_per_batch_ = n
        self.n_features_in_ = 4 * n
        self.classes_ = np.array([0, 1])
        return self

    def statistic(self, X) -> np.ndarray:
        check_is_fitted(self, "threshold_")
        return self._statistic(check_iq_batches(X, self.n_samples_per_batch_))

    def decision_function(self, X) -> np.ndarray:
        """Statistic minus threshold; positive means target declared."""
        return self.statistic(X) - self.threshold_

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)
