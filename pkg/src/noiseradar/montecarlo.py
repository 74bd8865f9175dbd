"""Monte Carlo validation of the analytic detector laws and ROC curves.

Trial ``i`` under hypothesis ``h`` is generated from the counter stream
``CounterStream(seed).split(h).split(i)``. Results depend only on
(seed, hypothesis, i), never on chunking or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from .detector import DetectorSpec
from .exceptions import DomainError
from .roc import EMPIRICAL, RocCurve, _grid
from .signal_model import CovarianceSpec, sample_channels
from .streams import CounterStream
from .vgamma import VgParams, vg_cdf, vg_isf, vg_pdf, vg_sf

NULL, ALT = "null", "alt"
_HYPOTHESIS_INDEX = {NULL: 0, ALT: 1}
# normals generated per chunk of trials
_CHUNK_NORMALS = 1 << 21


@dataclass(frozen=True)
class TrialPlan:
    cov_null: CovarianceSpec
    cov_alt: CovarianceSpec
    detector: DetectorSpec
    trials: int
    seed: int

    def __post_init__(self):
        if self.cov_null.rho != 0:
            raise DomainError("the null covariance must have rho = 0")
        if int(self.trials) != self.trials or self.trials < 1:
            raise DomainError("trials must be a positive integer")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @classmethod
    def simple(cls, rho: float, kappa: float, n: int, trials: int, seed: int,
               sign="qtms", sigma1: float = 1.0, sigma2: float = 1.0, phi: float = 0.0):
        """Plan for the unit-power covariance (or a scaled, phased one)."""
        null = CovarianceSpec(sigma1, sigma2, 0.0, phi, sign)
        alt = CovarianceSpec(sigma1, sigma2, rho, phi, sign)
        return cls(null, alt, DetectorSpec(kappa, n, sign), trials, seed)

    def covariance(self, hypothesis: str) -> CovarianceSpec:
        if hypothesis not in _HYPOTHESIS_INDEX:
            raise DomainError(f"hypothesis must be 'null' or 'alt', got {hypothesis!r}")
        return self.cov_null if hypothesis == NULL else self.cov_alt


@dataclass(frozen=True)
class GofReport:
    ks_statistic: float
    ks_critical: float
    sample_size: int
    alpha: float

    @property
    def passed(self) -> bool:
        return self.ks_statistic < self.ks_critical


def sample_power_and_correlation(plan: TrialPlan, hypothesis: str, workers: int = 1):
    """Per-trial (P_tot, D_0) sample means, each an array of length ``plan.trials``.

    Every detector in the family is an affine function of these two
    statistics, so one draw serves all kappa values.
    """
    cov = plan.covariance(hypothesis)
    n = plan.detector.n
    root = CounterStream(plan.seed).split(_HYPOTHESIS_INDEX[hypothesis])
    s = plan.detector.sign.value
    ptot = np.empty(plan.trials)
    corr = np.empty(plan.trials)
    step = max(1, _CHUNK_NORMALS // (4 * n))
    starts = range(0, plan.trials, step)

    def run(start):
        idx = np.arange(start, min(start + step, plan.trials))
        x = sample_channels(cov, n, root, idx)
        ptot[idx] = np.einsum("tni,tni->tn", x, x).mean(axis=1)
        corr[idx] = (x[..., 0] * x[..., 2] + s * x[..., 1] * x[..., 3]).mean(axis=1)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, starts))
    else:
        for start in starts:
            run(start)
    return ptot, corr


def sample_statistics(plan: TrialPlan, hypothesis: str, workers: int = 1) -> np.ndarray:
    """``plan.trials`` independent realizations of D_kappa under the hypothesis."""
    ptot, corr = sample_power_and_correlation(plan, hypothesis, workers)
    return corr - plan.detector.kappa * ptot / 2.0


def nearest_rank_quantile(sorted_values: np.ndarray, q: float) -> float:
    """The ceil(q n)-th smallest value (1-based), clamped to the sample."""
    n = sorted_values.size
    rank = min(max(int(math.ceil(q * n - 1e-9)), 1), n)
    return float(sorted_values[rank - 1])


def roc_from_samples(null_stats, alt_stats, pfa_grid=None, meta=None) -> RocCurve:
    """Empirical ROC with thresholds at nearest-rank (1 - pfa) null quantiles.

    ``stderr`` holds the binomial standard error of each pd estimate.
    ``meta['stderr_pfa']`` holds that of the false-alarm rate actually
    realized by the estimated threshold.
    """
    grid = _grid(pfa_grid)
    null_sorted = np.sort(np.asarray(null_stats, dtype=float))
    alt_sorted = np.sort(np.asarray(alt_stats, dtype=float))
    n0, n1 = null_sorted.size, alt_sorted.size
    if n0 == 0 or n1 == 0:
        raise DomainError("need samples under both hypotheses")
    thresholds = np.array([nearest_rank_quantile(null_sorted, 1.0 - p) for p in grid])
    exceed = n1 - np.searchsorted(alt_sorted, thresholds, side="right")
    pd = exceed / n1
    meta = dict(meta or {})
    meta.update(thresholds=thresholds, trials_null=n0, trials_alt=n1,
                stderr_pfa=np.sqrt(grid * (1.0 - grid) / n0))
    return RocCurve(grid, pd, EMPIRICAL, meta, stderr=np.sqrt(pd * (1.0 - pd) / n1))


def empirical_roc(plan: TrialPlan, pfa_grid=None, workers: int = 1) -> RocCurve:
    null = sample_statistics(plan, NULL, workers)
    alt = sample_statistics(plan, ALT, workers)
    meta = {"rho": plan.cov_alt.rho, "kappa": plan.detector.kappa, "N": plan.detector.n,
            "phi": plan.cov_alt.phi, "sign": plan.detector.sign.name.lower(),
            "seed": int(plan.seed), "trials": int(plan.trials)}
    return roc_from_samples(null, alt, pfa_grid, meta)


def ks_statistic(samples, cdf_values_sorted) -> float:
    """Two-sided KS distance given the model CDF at the sorted samples."""
    f = np.asarray(cdf_values_sorted, dtype=float)
    n = f.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical(alpha: float, n: int) -> float:
    """Asymptotic KS critical value c(alpha) / sqrt(n)."""
    return float(special.kolmogi(alpha)) / math.sqrt(n)


def gof_test(samples, law: VgParams, alpha: float = 0.01) -> GofReport:
    """One-sample Kolmogorov-Smirnov test of ``samples`` against the VG law."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    if xs.size == 0:
        raise DomainError("no samples")
    stat = ks_statistic(xs, vg_cdf(xs, law))
    return GofReport(stat, ks_critical(alpha, xs.size), int(xs.size), float(alpha))


def roc_standard_errors(pfa_grid, trials_null: int, trials_alt: int,
                        null_law: VgParams, alt_law: VgParams):
    """Exact pd on the grid and the standard error of its empirical estimate.

    An empirical ROC point carries two binomial errors: that of the pd
    estimate, and that of the false-alarm rate actually realized by the
    estimated threshold. The second is carried to the pd axis by the ROC
    slope d pd / d pfa = f_alt(T) / f_null(T). Both are evaluated under the
    exact laws. The error is floored at one count.
    """
    grid = _grid(pfa_grid)
    thresholds = np.array([vg_isf(float(p), null_law) for p in grid])
    pd = np.array([vg_sf(t, alt_law) for t in thresholds])
    slope = vg_pdf(thresholds, alt_law) / vg_pdf(thresholds, null_law)
    var = pd * (1.0 - pd) / trials_alt + slope ** 2 * grid * (1.0 - grid) / trials_null
    return pd, np.maximum(np.sqrt(var), 1.0 / trials_alt)


def roc_z_scores(empirical: RocCurve, null_law: VgParams, alt_law: VgParams) -> np.ndarray:
    """Standardized deviation of an empirical ROC from the exact one, per grid point."""
    pd, se = roc_standard_errors(empirical.pfa, empirical.meta["trials_null"],
                                 empirical.meta["trials_alt"], null_law, alt_law)
    return (empirical.pd - pd) / se
