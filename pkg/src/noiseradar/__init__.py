"""Exact detection statistics for noise-type and QTMS radar.

The Neyman-Pearson detector D_kappa = D_0 - kappa P_tot / 2 follows a
variance-gamma law. This package evaluates that law, the resulting ROC
curves, their large-N approximations, and Monte Carlo checks of all three.
"""

__version__ = "0.1.0"

from .detector import DecisionOutcome, DetectorSpec, d0, decide, llr, log_likelihood, np_statistic, p_tot
from .exceptions import DomainError, QuadratureError
from .montecarlo import GofReport, TrialPlan, empirical_roc, gof_test, sample_statistics
from .numerics import bessel_k_half_integer, erfc, erfc_inv, integrate
from .roc import (KappaSweep, RangeModel, RocComparison, RocCurve, compare_d0_vs_optimal,
                  default_pfa_grid, pd_vs_kappa, rho_of_range, roc0_approx, roc_approx_clt,
                  roc_exact)
from .signal_model import (CovarianceSpec, IqBatch, Sign, build_covariance, sample_batch,
                           simplified_covariance, whitening_matrix)
from .vgamma import (VgParams, d0_general_law, detector_law, vg_cdf, vg_cf, vg_isf, vg_mean,
                     vg_pdf, vg_quantile, vg_sf, vg_var)

__all__ = [
    "CovarianceSpec", "DecisionOutcome", "DetectorSpec", "DomainError", "GofReport",
    "IqBatch", "KappaSweep", "QuadratureError", "RangeModel", "RocComparison", "RocCurve",
    "Sign", "TrialPlan", "VgParams", "bessel_k_half_integer", "build_covariance",
    "compare_d0_vs_optimal", "d0", "d0_general_law", "decide", "default_pfa_grid",
    "detector_law", "empirical_roc", "erfc", "erfc_inv", "gof_test", "integrate", "llr",
    "log_likelihood", "np_statistic", "p_tot", "pd_vs_kappa", "rho_of_range", "roc0_approx",
    "roc_approx_clt", "roc_exact", "sample_batch", "sample_statistics",
    "simplified_covariance", "vg_cdf", "vg_cf", "vg_isf", "vg_mean", "vg_pdf",
    "vg_quantile", "vg_sf", "vg_var", "whitening_matrix",
]
