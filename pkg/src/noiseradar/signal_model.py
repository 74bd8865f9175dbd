"""Four-channel jointly Gaussian signal model.

Channels are ordered x = [I1, Q1, I2, Q2] (received I/Q, then reference I/Q).
The two sign conventions differ only in the Q1-Q2 cross-covariance: the
noise-radar covariance is the QTMS covariance conjugated by
P = diag(1, 1, 1, -1). The whitening and quadratic-form matrices transform
the same way.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .streams import CounterStream

_FLIP_Q2 = np.diag([1.0, 1.0, 1.0, -1.0])


class Sign(enum.Enum):
    """Sign of the Q1*Q2 term: +1 for standard noise radar, -1 for QTMS radar."""

    NOISE_RADAR = 1
    QTMS = -1

    @classmethod
    def parse(cls, value) -> "Sign":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower().replace("-", "_")
            aliases = {"noise_radar": cls.NOISE_RADAR, "noise": cls.NOISE_RADAR,
                       "+": cls.NOISE_RADAR, "qtms": cls.QTMS, "-": cls.QTMS}
            if key in aliases:
                return aliases[key]
        if value in (1, -1):
            return cls(value)
        raise DomainError(f"unknown sign convention {value!r}")


@dataclass(frozen=True)
class CovarianceSpec:
    sigma1: float = 1.0
    sigma2: float = 1.0
    rho: float = 0.0
    phi: float = 0.0
    sign: Sign = Sign.QTMS

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign.parse(self.sign))
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise DomainError("signal standard deviations must be positive")
        if not 0 <= self.rho < 1:
            raise DomainError(f"rho must lie in [0, 1), got {self.rho}")
        if not math.isfinite(self.phi):
            raise DomainError("phi must be finite")


@dataclass(frozen=True)
class IqBatch:
    """N i.i.d. rows of (I1, Q1, I2, Q2) voltages."""

    channels: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.channels, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4 or arr.shape[0] < 1:
            raise DomainError(f"expected an (N, 4) array with N >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("IQ samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)

    @property
    def n(self) -> int:
        return self.channels.shape[0]


def _cross_block(phi: float, sign: Sign) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    if sign is Sign.QTMS:
        return np.array([[c, s], [s, -c]])  # reflection
    return np.array([[c, s], [-s, c]])  # rotation


def build_covariance(spec: CovarianceSpec) -> np.ndarray:
    """4x4 covariance of [I1, Q1, I2, Q2]."""
    cross = spec.rho * spec.sigma1 * spec.sigma2 * _cross_block(spec.phi, spec.sign)
    cov = np.zeros((4, 4))
    cov[:2, :2] = spec.sigma1 ** 2 * np.eye(2)
    cov[2:, 2:] = spec.sigma2 ** 2 * np.eye(2)
    cov[:2, 2:] = cross
    cov[2:, :2] = cross.T
    return cov


def simplified_covariance(rho: float, sign=Sign.QTMS) -> np.ndarray:
    """Unit-power, zero-phase covariance Sigma(rho)."""
    return build_covariance(CovarianceSpec(1.0, 1.0, rho, 0.0, sign))


def sample_batch(spec: CovarianceSpec, n: int, stream: CounterStream) -> IqBatch:
    """Draw n rows as L z with L the Cholesky factor and z i.i.d. standard normal."""
    if int(n) != n or n < 1:
        raise DomainError("batch size must be a positive integer")
    chol = np.linalg.cholesky(build_covariance(spec))
    z = stream.normals(4 * int(n)).reshape(int(n), 4)
    return IqBatch(z @ chol.T)


def sample_channels(spec: CovarianceSpec, n: int, stream: CounterStream, trials) -> np.ndarray:
    """Array of shape (len(trials), n, 4); batch t is drawn from ``stream.split(trials[t])``.

    Row t is identical to ``sample_batch(spec, n, stream.split(trials[t])).channels``.
    """
    chol = np.linalg.cholesky(build_covariance(spec))
    z = stream.child_normals(trials, 4 * int(n)).reshape(-1, int(n), 4)
    return z @ chol.T


def whitening_matrix(rho: float, sign=Sign.QTMS) -> np.ndarray:
    """B with B Sigma(rho) B^T = I that also diagonalizes the NP quadratic form.

    Rows are the normalized sum and difference channels
    (I1 + I2), (Q1 -/+ Q2) over sqrt(2(1+rho)) and
    (I1 - I2), (Q1 +/- Q2) over sqrt(2(1-rho)).
    """
    if not 0 <= rho < 1:
        raise DomainError(f"rho must lie in [0, 1), got {rho}")
    p = 1.0 / math.sqrt(2.0 * (1.0 + rho))
    m = 1.0 / math.sqrt(2.0 * (1.0 - rho))
    b = np.array([
        [p, 0.0, p, 0.0],
        [0.0, p, 0.0, -p],
        [m, 0.0, -m, 0.0],
        [0.0, m, 0.0, m],
    ])
    return b if Sign.parse(sign) is Sign.QTMS else b @ _FLIP_Q2


def quadratic_form_matrix(kappa: float, sign=Sign.QTMS) -> np.ndarray:
    """A with x^T A x = I1 I2 +/- Q1 Q2 - kappa * P_tot / 2."""
    if not 0 <= kappa < 1:
        raise DomainError(f"kappa must lie in [0, 1), got {kappa}")
    a = 0.5 * np.array([
        [-kappa, 0.0, 1.0, 0.0],
        [0.0, -kappa, 0.0, -1.0],
        [1.0, 0.0, -kappa, 0.0],
        [0.0, -1.0, 0.0, -kappa],
    ])
    return a if Sign.parse(sign) is Sign.QTMS else _FLIP_Q2 @ a @ _FLIP_Q2


def diagonalized_form(rho: float, kappa: float, sign=Sign.QTMS) -> np.ndarray:
    """(B^-1)^T A B^-1: the NP form in whitened coordinates."""
    b_inv = np.linalg.inv(whitening_matrix(rho, sign))
    return b_inv.T @ quadratic_form_matrix(kappa, sign) @ b_inv
