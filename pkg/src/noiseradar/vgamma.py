"""The variance-gamma distribution VG(c, sigma, theta, nu).

Parameterization: location c, scale sigma > 0, asymmetry theta, shape nu > 0,
with characteristic function

    phi(t) = exp(j c t) * (1 - j theta nu t + sigma^2 nu t^2 / 2) ** (-1/nu).

The NP detector statistic has shape nu = 1/N, so the Bessel order in the
density, 1/nu - 1/2, is a half-integer and the closed-form Bessel series
applies. Other shapes fall back to scipy's general-order ``kve``.

No closed form is known for the CDF. It is computed by adaptive quadrature of
the density, split at the kink x = c. An independent route writes
X = c + a*G1 - b*G2 with G1, G2 ~ Gamma(1/nu) i.i.d. and integrates the gamma
CDF against the gamma density (:func:`vg_cdf_gamma`). The ROC engine falls
back to that route when the first one fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import DomainError, QuadratureError
from .numerics import integrate, integrate_pieces, log_zpow_bessel_k_half_integer

#: |F(quantile(q)) - q| target, relative to min(q, 1 - q).
QUANTILE_REL_TOL = 1e-11
#: Half-width of the initial quantile bracket, in standard deviations.
QUANTILE_BRACKET_SD = 20.0
#: Quadrature tolerances used for CDF evaluation.
CDF_ABS_TOL = 1e-14
CDF_REL_TOL = 1e-12


@dataclass(frozen=True)
class VgParams:
    """Variance-gamma parameters (c, sigma, theta, nu)."""

    c: float
    sigma: float
    theta: float
    nu: float

    def __post_init__(self):
        for name in ("c", "sigma", "theta", "nu"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")

    @property
    def shape(self) -> float:
        """Gamma shape 1/nu (the sample count N for detector laws)."""
        return 1.0 / self.nu

    @property
    def half_integer_index(self) -> int | None:
        """n such that the Bessel order is n + 1/2, or None."""
        k = round(self.shape)
        if k >= 1 and abs(self.shape - k) <= 1e-12 * k:
            return k - 1
        return None

    @property
    def gamma_scales(self) -> tuple[float, float]:
        """(a, b) with X = c + a*G1 - b*G2, G1, G2 ~ Gamma(1/nu, 1)."""
        tn = self.theta * self.nu
        root = math.sqrt(tn * tn + 2.0 * self.sigma ** 2 * self.nu)
        return 0.5 * (root + tn), 0.5 * (root - tn)


# ---------------------------------------------------------------------------
# density, characteristic function, moments
# ---------------------------------------------------------------------------

def vg_logpdf(x, p: VgParams):
    """Log density, assembled term by term in log space."""
    x = np.asarray(x, dtype=float)
    s2 = p.sigma ** 2
    k = p.shape
    order = k - 0.5
    gam = math.sqrt(2.0 * s2 / p.nu + p.theta ** 2)
    alpha = gam / s2
    const = (math.log(2.0) - math.log(p.sigma) - 0.5 * math.log(2 * math.pi)
             - k * math.log(p.nu) - special.gammaln(k)
             - order * (math.log(gam) + math.log(alpha)))
    dx = x - p.c
    z = alpha * np.abs(dx)
    n = p.half_integer_index
    if n is not None:
        bessel_part = log_zpow_bessel_k_half_integer(n, z)
    else:
        with np.errstate(divide="ignore"):
            bessel_part = order * np.log(z) + np.log(special.kve(order, z)) - z
        if order > 0:
            # z^v K_v(z) -> Gamma(v) 2^(v-1) as z -> 0
            limit = special.gammaln(order) + (order - 1) * math.log(2.0)
            bessel_part = np.where(z == 0, limit, bessel_part)
    return const + p.theta * dx / s2 + bessel_part


def vg_pdf(x, p: VgParams):
    """Density of VG(c, sigma, theta, nu).

    At x = c the density is the analytic limit; for nu = 1 (N = 1) that is
    the finite value at the derivative kink.
    """
    return np.exp(vg_logpdf(x, p))


def vg_cf(t, p: VgParams):
    """Characteristic function, principal branch of the complex power.

    The base 1 - j theta nu t + sigma^2 nu t^2 / 2 has real part >= 1, so it
    never crosses the branch cut and the principal log is continuous in t.
    """
    t = np.asarray(t, dtype=float)
    base = 1.0 + 0.5 * p.sigma ** 2 * p.nu * t * t - 1j * p.theta * p.nu * t
    assert np.all(base.real > 0)
    return np.exp(1j * p.c * t - p.shape * np.log(base))


def vg_mean(p: VgParams) -> float:
    return p.c + p.theta


def vg_var(p: VgParams) -> float:
    return p.sigma ** 2 + p.theta ** 2 * p.nu


def vg_std(p: VgParams) -> float:
    return math.sqrt(vg_var(p))


def vg_rvs(p: VgParams, size, rng: np.random.Generator) -> np.ndarray:
    """Draw variates through the gamma-difference representation."""
    a, b = p.gamma_scales
    return p.c + a * rng.gamma(p.shape, size=size) - b * rng.gamma(p.shape, size=size)


# ---------------------------------------------------------------------------
# CDF by quadrature of the density
# ---------------------------------------------------------------------------

def _density(p):
    return lambda x: vg_pdf(x, p)


def _lower_tail(x: float, p: VgParams) -> float:
    m, s = vg_mean(p), vg_std(p)
    bps = (p.c, m, m - 8 * s, m - 40 * s)
    return integrate(_density(p), -math.inf, x, abs_tol=CDF_ABS_TOL,
                     rel_tol=CDF_REL_TOL, breakpoints=bps).value


def _upper_tail(x: float, p: VgParams) -> float:
    m, s = vg_mean(p), vg_std(p)
    bps = (p.c, m, m + 8 * s, m + 40 * s)
    return integrate(_density(p), x, math.inf, abs_tol=CDF_ABS_TOL,
                     rel_tol=CDF_REL_TOL, breakpoints=bps).value


def _cdf_scalar(x: float, p: VgParams, upper: bool) -> float:
    if math.isinf(x):
        below = 0.0 if x < 0 else 1.0
        return 1.0 - below if upper else below
    # integrate whichever tail is smaller, then complement if needed
    if x <= vg_mean(p):
        lower = _lower_tail(x, p)
        val = 1.0 - lower if upper else lower
    else:
        up = _upper_tail(x, p)
        val = up if upper else 1.0 - up
    return min(1.0, max(0.0, val))


def _cdf_many(x: np.ndarray, p: VgParams, upper: bool) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    xs = x[order]
    finite = xs[np.isfinite(xs)]
    out = np.empty(xs.shape)
    if finite.size == 0:
        out[:] = [_cdf_scalar(v, p, upper) for v in xs]
    else:
        edges = np.unique(np.concatenate([finite, [p.c]] if finite[0] < p.c < finite[-1]
                                         else [finite]))
        pieces = np.zeros(0)
        if edges.size > 1:
            pieces, _ = integrate_pieces(_density(p), edges, abs_tol=CDF_ABS_TOL,
                                         rel_tol=CDF_REL_TOL)
        if upper:
            tail = _cdf_scalar(edges[-1], p, upper=True)
            cum = tail + np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        else:
            tail = _cdf_scalar(edges[0], p, upper=False)
            cum = tail + np.concatenate([[0.0], np.cumsum(pieces)])
        idx = np.searchsorted(edges, xs)
        ok = np.isfinite(xs)
        out[ok] = cum[idx[ok]]
        out[~ok] = [_cdf_scalar(v, p, upper) for v in xs[~ok]]
    result = np.empty_like(out)
    result[order] = np.clip(out, 0.0, 1.0)
    return result


def vg_cdf(x, p: VgParams):
    """P(X <= x), by adaptive quadrature of the density.

    Array input is sorted and integrated piecewise between consecutive
    points, so evaluating at 10^5 sample points costs roughly one pass over
    the real line.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return _cdf_scalar(float(arr), p, upper=False)
    return _cdf_many(arr.ravel(), p, upper=False).reshape(arr.shape)


def vg_sf(x, p: VgParams):
    """P(X > x). Accurate in the far upper tail, unlike 1 - vg_cdf."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return _cdf_scalar(float(arr), p, upper=True)
    return _cdf_many(arr.ravel(), p, upper=True).reshape(arr.shape)


# ---------------------------------------------------------------------------
# CDF through the gamma-difference representation
# ---------------------------------------------------------------------------

def _gamma_logpdf(g, k):
    with np.errstate(divide="ignore"):
        return (k - 1.0) * np.log(g) - g - special.gammaln(k)


def _gamma_mixture(x: float, p: VgParams, upper: bool) -> float:
    k = p.shape
    a, b = p.gamma_scales
    shift = x - p.c

    def integrand(g):
        arg = np.maximum(0.0, (shift + b * g) / a)
        inner = special.gammaincc(k, arg) if upper else special.gammainc(k, arg)
        dens = np.exp(_gamma_logpdf(g, k))
        if k == 1.0:
            dens = np.where(g == 0, 1.0, dens)
        return inner * dens

    bps = [max(k - 1.0, 0.0), k + 10 * math.sqrt(k), k + 40 * math.sqrt(k)]
    if shift < 0 and b > 0:
        bps.append(-shift / b)
    res = integrate(integrand, 0.0, math.inf, abs_tol=CDF_ABS_TOL, rel_tol=CDF_REL_TOL,
                    breakpoints=bps)
    return min(1.0, max(0.0, res.value))


def vg_cdf_gamma(x, p: VgParams):
    """P(X <= x) computed as E[P(a*G1 <= x - c + b*G2 | G2)]."""
    arr = np.asarray(x, dtype=float)
    vals = np.array([_gamma_mixture(float(v), p, upper=False) for v in arr.ravel()])
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)


def vg_sf_gamma(x, p: VgParams):
    """P(X > x) through the gamma-difference representation."""
    arr = np.asarray(x, dtype=float)
    vals = np.array([_gamma_mixture(float(v), p, upper=True) for v in arr.ravel()])
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)


# ---------------------------------------------------------------------------
# quantiles
# ---------------------------------------------------------------------------

def _solve_tail(target: float, p: VgParams, upper: bool, tail_fn=None) -> float:
    """Find x with tail(x) = target, tail being the CDF or (upper) the SF.

    Bisection-safeguarded Newton with the density as derivative. After the
    first full tail evaluation, each new iterate updates the tail by
    integrating the density over the step only.
    """
    if tail_fn is None:
        def tail_fn(v):
            return _cdf_scalar(v, p, upper)
    m, s = vg_mean(p), vg_std(p)
    tol = QUANTILE_REL_TOL * min(target, 1.0 - target)
    direction = -1.0 if upper else 1.0  # sign of d tail / dx

    lo, hi = m - QUANTILE_BRACKET_SD * s, m + QUANTILE_BRACKET_SD * s
    # widen until the bracket holds the root
    for _ in range(60):
        if direction * (tail_fn(lo) - target) <= 0:
            break
        lo -= QUANTILE_BRACKET_SD * s
    else:
        raise DomainError("could not bracket the quantile from below")
    for _ in range(60):
        if direction * (tail_fn(hi) - target) >= 0:
            break
        hi += QUANTILE_BRACKET_SD * s
    else:
        raise DomainError("could not bracket the quantile from above")

    z = special.ndtri(1.0 - target if upper else target)
    x = min(max(m + s * float(z), lo + 1e-3 * (hi - lo)), hi - 1e-3 * (hi - lo))
    value = tail_fn(x)
    for _ in range(200):
        resid = value - target
        if abs(resid) <= tol:
            return x
        if direction * resid > 0:
            hi = x
        else:
            lo = x
        dens = float(vg_pdf(x, p))
        x_new = x - resid / (direction * dens) if dens > 0 else math.nan
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4 * np.finfo(float).eps * max(abs(x), s):
            return x
        step = integrate(_density(p), x, x_new, abs_tol=CDF_ABS_TOL, rel_tol=CDF_REL_TOL,
                         breakpoints=(p.c,)).value
        value += direction * step
        x = x_new
    raise QuadratureError("quantile iteration did not converge", value=x)


def vg_quantile(q: float, p: VgParams) -> float:
    """x with vg_cdf(x) = q."""
    if not 0 < q < 1:
        raise DomainError("quantile level must lie in (0, 1)")
    return _solve_tail(float(q), p, upper=False)


def vg_isf(s: float, p: VgParams) -> float:
    """x with vg_sf(x) = s; the threshold for false-alarm probability s."""
    if not 0 < s < 1:
        raise DomainError("tail probability must lie in (0, 1)")
    return _solve_tail(float(s), p, upper=True)


def vg_isf_gamma(s: float, p: VgParams) -> float:
    """Like :func:`vg_isf`, with the gamma-difference tail throughout."""
    if not 0 < s < 1:
        raise DomainError("tail probability must lie in (0, 1)")
    return _solve_tail(float(s), p, upper=True,
                       tail_fn=lambda v: _gamma_mixture(v, p, upper=True))


# ---------------------------------------------------------------------------
# laws of the detector statistics
# ---------------------------------------------------------------------------

def _check_unit(name: str, v: float):
    if not 0 <= v < 1:
        raise DomainError(f"{name} must lie in [0, 1), got {v}")


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n!r}")
    return int(n)


def c_plus_minus(rho: float, kappa: float) -> tuple[float, float]:
    """Eigenvalue magnitudes (1+rho)(1-kappa)/2 and (1-rho)(1+kappa)/2."""
    return 0.5 * (1 + rho) * (1 - kappa), 0.5 * (1 - rho) * (1 + kappa)


def detector_law(rho: float, kappa: float, n: int) -> VgParams:
    """Exact law of the NP statistic D_kappa (sample mean over n) at correlation rho."""
    _check_unit("rho", rho)
    _check_unit("kappa", kappa)
    n = _check_n(n)
    sigma = math.sqrt(2.0 * (1 - rho ** 2) * (1 - kappa ** 2) / n)
    return VgParams(0.0, sigma, 2.0 * (rho - kappa), 1.0 / n)


def d0_general_law(cov, n: int) -> VgParams:
    """Exact law of D_0 under the general covariance (sigma1, sigma2, rho, phi).

    The per-sample form I1*I2 +/- Q1*Q2 has eigenvalues (against the
    covariance) lambda_+ and -lambda_-, each of multiplicity two, with
    lambda_+ - lambda_- = rho s1 s2 cos(phi) and
    lambda_+ lambda_- = s1^2 s2^2 (1 - rho^2) / 4, for either sign convention.
    Hence sigma = s1 s2 sqrt(2 (1 - rho^2) / N) and
    theta = 2 rho s1 s2 cos(phi). The scale does not depend on phi because
    I1*I2 and Q1*Q2 are correlated through the sin(phi) cross-covariances.
    """
    n = _check_n(n)
    s12 = cov.sigma1 * cov.sigma2
    sigma = s12 * math.sqrt(2.0 * (1 - cov.rho ** 2) / n)
    return VgParams(0.0, sigma, 2.0 * cov.rho * s12 * math.cos(cov.phi), 1.0 / n)


def d0_general_law_phase_reduced(cov, n: int) -> VgParams:
    """VG law with scale s1 s2 sqrt(2 (1 - rho^2 cos^2 phi) / N).

    This is what summing the laws of I1*I2 and +/-Q1*Q2 as if they were
    independent gives. It matches :func:`d0_general_law` only when
    sin(phi) = 0 or rho = 0. Kept for comparison; the Monte Carlo tests show
    that it overstates the variance of D_0.
    """
    n = _check_n(n)
    s12 = cov.sigma1 * cov.sigma2
    rc = cov.rho * math.cos(cov.phi)
    return VgParams(0.0, s12 * math.sqrt(2.0 * (1 - rc ** 2) / n), 2.0 * rc * s12, 1.0 / n)
