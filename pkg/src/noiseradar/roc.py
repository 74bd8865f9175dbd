"""ROC curves of the NP detector family.

Exact curves set the threshold on the null law (rho = 0) and read the
detection probability off the alternative law; both are variance-gamma.
Large-N approximations replace both laws by normals with matched moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, QuadratureError
from .numerics import erfc, erfc_inv
from .vgamma import detector_law, vg_isf, vg_isf_gamma, vg_sf, vg_sf_gamma

EXACT, APPROX_CLT, EMPIRICAL = "exact", "approx_clt", "empirical"
#: Per-point evaluation routes recorded on exact curves.
PATH_QUADRATURE, PATH_GAMMA = "vg_quadrature", "gamma_mixture"
MONOTONE_SLACK = 1e-9
DEFAULT_KAPPA_STEP = 0.01


def default_pfa_grid(points: int = 60, pfa_min: float = 1e-4, pfa_max: float = 1.0) -> np.ndarray:
    """``points`` log-spaced false-alarm rates in [pfa_min, pfa_max), endpoint excluded."""
    if not 0 < pfa_min < pfa_max <= 1:
        raise DomainError("need 0 < pfa_min < pfa_max <= 1")
    grid = np.logspace(math.log10(pfa_min), math.log10(pfa_max), int(points) + 1)
    return grid[:-1]


@dataclass
class RocCurve:
    pfa: np.ndarray
    pd: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)
    stderr: np.ndarray | None = None
    paths: list | None = None

    def __post_init__(self):
        self.pfa = np.asarray(self.pfa, dtype=float)
        self.pd = np.asarray(self.pd, dtype=float)
        if self.pfa.shape != self.pd.shape or self.pfa.ndim != 1:
            raise DomainError("pfa and pd must be 1-d arrays of equal length")
        if np.any(np.diff(self.pfa) <= 0):
            raise DomainError("pfa must be strictly increasing")
        if np.any((self.pfa <= 0) | (self.pfa >= 1)):
            raise DomainError("pfa values must lie in (0, 1)")
        if self.method != EMPIRICAL and np.any(np.diff(self.pd) < -MONOTONE_SLACK):
            raise DomainError("analytic ROC is not monotone")

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.pfa.tolist(), self.pd.tolist()))

    @property
    def fallbacks_used(self) -> bool:
        return bool(self.paths) and any(p != PATH_QUADRATURE for p in self.paths)


@dataclass(frozen=True)
class RangeModel:
    rho0: float
    rc: float

    def __post_init__(self):
        if not 0 <= self.rho0 < 1:
            raise DomainError(f"rho0 must lie in [0, 1), got {self.rho0}")
        if not self.rc > 0:
            raise DomainError("characteristic range must be positive")


def _grid(pfa_grid) -> np.ndarray:
    grid = default_pfa_grid() if pfa_grid is None else np.asarray(pfa_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("pfa grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("pfa grid must be strictly increasing")
    return grid


def _exact_point(pfa, null, alt):
    try:
        threshold = vg_isf(pfa, null)
        pd = vg_sf(threshold, alt)
        if math.isfinite(pd) and math.isfinite(threshold):
            return pd, PATH_QUADRATURE
    except QuadratureError:
        pass
    try:
        threshold = vg_isf_gamma(pfa, null)
        return vg_sf_gamma(threshold, alt), PATH_GAMMA
    except QuadratureError as exc:
        raise QuadratureError(f"exact ROC failed at pfa={pfa!r}: {exc}",
                              value=exc.value, error_estimate=exc.error_estimate) from exc


def roc_exact(rho: float, kappa: float, n: int, pfa_grid=None) -> RocCurve:
    """Exact ROC of D_kappa at true correlation rho.

    The threshold at each false-alarm rate comes from the null law
    detector_law(0, kappa, n). The detection probability is the survival
    function of detector_law(rho, kappa, n) at that threshold. A point whose
    density quadrature fails is recomputed through the gamma-difference
    representation, and ``paths`` records which route produced it.
    """
    grid = _grid(pfa_grid)
    null = detector_law(0.0, kappa, n)
    alt = detector_law(rho, kappa, n)
    pds, paths = [], []
    for pfa in grid:
        pd, path = _exact_point(float(pfa), null, alt)
        pds.append(pd)
        paths.append(path)
    meta = {"rho": rho, "kappa": kappa, "N": int(n)}
    return RocCurve(grid, np.array(pds), EXACT, meta, paths=paths)


def roc_approx_clt(rho: float, kappa: float, n: int, pfa):
    """Large-N ROC of D_kappa from normal approximations of both laws.

    pd = erfc[(sqrt(1 + kappa^2) erfcinv(2 pfa) - sqrt(N) rho)
              / sqrt((rho - kappa)^2 + (1 - rho kappa)^2)] / 2
    """
    pfa = np.asarray(pfa, dtype=float)
    num = math.sqrt(1.0 + kappa ** 2) * erfc_inv(2.0 * pfa) - math.sqrt(n) * rho
    den = math.sqrt((rho - kappa) ** 2 + (1.0 - rho * kappa) ** 2)
    out = 0.5 * erfc(num / den)
    return float(out) if out.ndim == 0 else out


def roc0_approx(rho: float, phi: float, n: int, pfa, exact_variance: bool = False):
    """Large-N ROC of D_0 under the general covariance.

    By default the phase enters only through rho*cos(phi):
    pd = erfc[(erfcinv(2 pfa) - sqrt(N) rho cos phi) / sqrt(1 + rho^2 cos^2 phi)] / 2.
    With ``exact_variance`` the alternative's variance is taken from
    :func:`~noiseradar.vgamma.d0_general_law`, which turns the denominator into
    sqrt(1 + rho^2 cos(2 phi)). The two agree at phi = 0.
    """
    pfa = np.asarray(pfa, dtype=float)
    rc = rho * math.cos(phi)
    if exact_variance:
        den = math.sqrt(1.0 + rho ** 2 * math.cos(2.0 * phi))
    else:
        den = math.sqrt(1.0 + rc ** 2)
    out = 0.5 * erfc((erfc_inv(2.0 * pfa) - math.sqrt(n) * rc) / den)
    return float(out) if out.ndim == 0 else out


def roc_approx_curve(rho: float, kappa: float, n: int, pfa_grid=None) -> RocCurve:
    grid = _grid(pfa_grid)
    return RocCurve(grid, roc_approx_clt(rho, kappa, n, grid), APPROX_CLT,
                    {"rho": rho, "kappa": kappa, "N": int(n)})


@dataclass
class KappaSweep:
    """Detection probability across detector parameters at fixed (rho, N, pfa)."""

    rho: float
    n: int
    pfa: float
    kappa: np.ndarray
    pd: np.ndarray
    normalized_pd: np.ndarray

    @property
    def argmax(self) -> float:
        return float(self.kappa[int(np.argmax(self.pd))])

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.kappa.tolist(), self.normalized_pd.tolist()))


def kappa_grid(step: float = DEFAULT_KAPPA_STEP, kappa_max: float = 0.99) -> np.ndarray:
    if not step > 0:
        raise DomainError("kappa step must be positive")
    count = int(math.floor(kappa_max / step + 1e-9)) + 1
    return np.round(np.arange(count) * step, 12)


def pd_vs_kappa(rho: float, n: int, pfa: float, kappa_values=None) -> KappaSweep:
    """Exact pd at each kappa, normalized by the largest value on the grid.

    Ties in the maximum resolve to the smallest kappa.
    """
    ks = kappa_grid() if kappa_values is None else np.asarray(kappa_values, dtype=float)
    if np.any((ks < 0) | (ks >= 1)):
        raise DomainError("kappa grid must lie within [0, 1)")
    pds = np.array([roc_exact(rho, float(k), n, [pfa]).pd[0] for k in ks])
    best = pds.max()
    normalized = pds / best if best > 0 else np.full_like(pds, math.nan)
    return KappaSweep(rho, int(n), float(pfa), ks, pds, normalized)


def rho_of_range(model: RangeModel, r):
    """rho(R) = rho0 / sqrt(1 + (R / Rc)^4)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("range must be nonnegative")
    out = model.rho0 / np.sqrt(1.0 + (r / model.rc) ** 4)
    return float(out) if out.ndim == 0 else out


@dataclass
class RocComparison:
    optimal: RocCurve
    d0: RocCurve

    @property
    def gap(self) -> np.ndarray:
        return self.optimal.pd - self.d0.pd


def compare_d0_vs_optimal(rho: float, n: int, pfa_grid=None) -> RocComparison:
    """Exact ROCs of D_rho (matched detector) and D_0 on a common grid."""
    grid = _grid(pfa_grid)
    return RocComparison(roc_exact(rho, rho, n, grid), roc_exact(rho, 0.0, n, grid))
