"""Detector statistics computed from IQ batches.

All functions accept an :class:`IqBatch` or a raw array whose last two axes
are (N, 4); leading axes index independent batches and are preserved.
Per-row terms are formed first and then averaged along a contiguous axis,
so numpy's pairwise summation applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .signal_model import IqBatch, Sign

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class DetectorSpec:
    kappa: float
    n: int
    sign: Sign = Sign.QTMS

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign.parse(self.sign))
        if not 0 <= self.kappa < 1:
            raise DomainError(f"kappa must lie in [0, 1), got {self.kappa}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class DecisionOutcome:
    statistic: float
    threshold: float
    declared_target: bool


def _channels(batch) -> np.ndarray:
    arr = batch.channels if isinstance(batch, IqBatch) else np.asarray(batch, dtype=float)
    if arr.ndim < 2 or arr.shape[-1] != 4:
        raise DomainError(f"expected (..., N, 4) IQ data, got shape {arr.shape}")
    if arr.shape[-2] == 0:
        raise DomainError("empty batch")
    return arr


def _row_mean(rows: np.ndarray):
    out = rows.mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def p_tot(batch):
    """Sample mean of I1^2 + Q1^2 + I2^2 + Q2^2."""
    x = _channels(batch)
    return _row_mean(np.einsum("...i,...i->...", x, x))


def d0(batch, sign=Sign.QTMS):
    """Sample mean of I1*I2 + Q1*Q2 (noise radar) or I1*I2 - Q1*Q2 (QTMS)."""
    x = _channels(batch)
    s = Sign.parse(sign).value
    return _row_mean(x[..., 0] * x[..., 2] + s * x[..., 1] * x[..., 3])


def np_statistic(batch, spec: DetectorSpec):
    """The NP detector D_kappa = D_0 - kappa * P_tot / 2."""
    x = _channels(batch)
    if x.shape[-2] != spec.n:
        raise DomainError(f"batch has {x.shape[-2]} rows but the detector integrates {spec.n}")
    return d0(x, spec.sign) - spec.kappa * p_tot(x) / 2.0


def log_likelihood(batch, rho: float, sign=Sign.QTMS):
    """Exact Gaussian log-likelihood of the batch under Sigma(rho).

    -(N/2) [(P_tot - 2 rho D_0)/(1 - rho^2) + 2 ln(1 - rho^2) + 4 ln(2 pi)]
    """
    if not 0 <= rho < 1:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    x = _channels(batch)
    n = x.shape[-2]
    q = 1.0 - rho * rho
    return -0.5 * n * ((p_tot(x) - 2.0 * rho * d0(x, sign)) / q
                       + 2.0 * math.log(q) + 4.0 * _LOG_2PI)


def llr(batch, kappa: float, sign=Sign.QTMS):
    """-2[l(0) - l(kappa)] = N [(2 D_0 kappa - P_tot kappa^2)/(1 - kappa^2) - 2 ln(1 - kappa^2)]."""
    if not 0 <= kappa < 1:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    x = _channels(batch)
    n = x.shape[-2]
    q = 1.0 - kappa * kappa
    return n * ((2.0 * d0(x, sign) * kappa - p_tot(x) * kappa ** 2) / q - 2.0 * math.log(q))


def decide(statistic: float, threshold: float) -> DecisionOutcome:
    """Declare a target iff the statistic strictly exceeds the threshold."""
    return DecisionOutcome(float(statistic), float(threshold), bool(statistic > threshold))
