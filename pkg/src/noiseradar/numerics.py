"""Special functions and numerical primitives.

Everything here is a pure function of its arguments. Tolerances are module
constants and can be overridden per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .exceptions import DomainError, QuadratureError

#: Absolute tolerance on the log-residual of the erfc inversion.
#: Default absolute tolerance of :func:`integrate`.
QUAD_ABS_TOL = 1e-13
#: Default relative tolerance of :func:`integrate`.
QUAD_REL_TOL = 1e-13
#: Subinterval budget of the adaptive integrator.
QUAD_MAX_INTERVALS = 20_000

# Largest number of (point, term) pairs held in memory by the Bessel series.
_SERIES_CHUNK = 4_000_000

# 15-point Kronrod abscissae (positive half, descending) and weights, with the
# embedded 7-point Gauss weights for the odd-indexed abscissae.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[[9, 11, 13]] = _WG[2::-1]
_GAUSS_W[7] = _WG[3]

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Bessel K of half-integer order
# ---------------------------------------------------------------------------

def _series_log_coefficients(n: int) -> np.ndarray:
    """log[(n+k)! / (k! (n-k)! 2^k)] for k = 0..n."""
    k = np.arange(n + 1, dtype=float)
    return (special.gammaln(n + k + 1) - special.gammaln(k + 1)
            - special.gammaln(n - k + 1) - k * math.log(2.0))


def _check_order(n) -> int:
    if int(n) != n or n < 0:
        raise DomainError(f"order index must be a nonnegative integer, got {n!r}")
    return int(n)


def log_zpow_bessel_k_half_integer(n: int, z):
    """Return log(z**(n+1/2) * K_{n+1/2}(z)) for z >= 0.

    The product is finite at z = 0, where it equals
    (2n)!/(n! 2^n) * sqrt(pi/2). Used by the variance-gamma density, which
    multiplies the Bessel function by exactly this power of its argument.
    """
    n = _check_order(n)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError("argument must be nonnegative")
    logc = _series_log_coefficients(n)
    powers = n - np.arange(n + 1, dtype=float)
    flat = z.ravel()
    out = np.empty(flat.shape)
    step = max(1, _SERIES_CHUNK // (n + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, flat.size, step):
            zc = flat[start:start + step]
            logz = np.log(zc)[:, None]
            terms = logc + powers * logz
            # z == 0: only the k == n term (power 0) survives
            terms = np.where(powers == 0, logc, terms)
            terms = np.where(np.isnan(terms), -np.inf, terms)
            peak = terms.max(axis=1)
            lse = peak + np.log(np.exp(terms - peak[:, None]).sum(axis=1))
            out[start:start + step] = 0.5 * math.log(math.pi / 2) - zc + lse
    return out.reshape(z.shape) if z.ndim else float(out[0])


def log_bessel_k_half_integer(n: int, z):
    """log K_{n+1/2}(z) for z > 0, finite far beyond the overflow range of K."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or np.any(np.isnan(z)):
        raise DomainError("Bessel K requires z > 0")
    n = _check_order(n)
    return log_zpow_bessel_k_half_integer(n, z) - (n + 0.5) * np.log(z)


def bessel_k_half_integer(n: int, z):
    """Modified Bessel function of the second kind, order n + 1/2.

    Uses the terminating series
    K_{n+1/2}(z) = sqrt(pi/(2z)) e^{-z} sum_k (n+k)!/(k!(n-k)!(2z)^k),
    summed in log space so that large orders and arguments do not overflow
    before the final exponentiation.
    """
    return np.exp(log_bessel_k_half_integer(n, z))


# ---------------------------------------------------------------------------
# Complementary error function and its inverse
# ---------------------------------------------------------------------------

def erfc(x):
    """Complementary error function (scipy's Cephes implementation)."""
    return special.erfc(x)


def erfc_inv(y):
    """Inverse complementary error function on (0, 2), via scipy.

    Accurate to a few ulp down to the smallest normal doubles; only the
    domain check is added here.
    """
    arr = np.asarray(y, dtype=float)
    if np.any(~((arr > 0) & (arr < 2))):
        raise DomainError("erfc_inv requires 0 < y < 2")
    out = special.erfcinv(arr)
    return out if arr.ndim else float(out)


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0 or self.evaluations < 1:
            raise ValueError("invalid quadrature result")


def _pieces(a: float, b: float, breakpoints: Sequence[float]):
    inner = sorted({float(p) for p in breakpoints if a < p < b and math.isfinite(p)})
    if not inner and math.isinf(a) and math.isinf(b):
        inner = [0.0]
    edges = [a, *inner, b]
    return list(zip(edges[:-1], edges[1:]))


# piece kinds: finite, [p, inf), (-inf, q]
_FINITE, _RIGHT, _LEFT = 0, 1, 2


def _adaptive_gk(f, pieces, abs_tol, rel_tol, max_intervals):
    """Integrate f over each (lo, hi) piece; returns per-piece values, errors, evaluations."""
    kinds, anchors, t_lo, t_hi = [], [], [], []
    for lo, hi in pieces:
        if math.isinf(lo) and math.isinf(hi):
            raise ValueError("doubly infinite piece must be split first")
        if math.isinf(hi):
            kinds.append(_RIGHT); anchors.append(lo); t_lo.append(0.0); t_hi.append(1.0)
        elif math.isinf(lo):
            kinds.append(_LEFT); anchors.append(hi); t_lo.append(0.0); t_hi.append(1.0)
        else:
            kinds.append(_FINITE); anchors.append(0.0); t_lo.append(lo); t_hi.append(hi)
    npieces = len(pieces)
    kinds = np.array(kinds)
    anchors = np.array(anchors, dtype=float)
    lo = np.array(t_lo, dtype=float)
    hi = np.array(t_hi, dtype=float)
    owner = np.arange(npieces)
    total_width = float(np.sum(hi - lo))

    values = np.zeros(npieces)
    errors = np.zeros(npieces)
    evaluations = 0
    running_total = 0.0

    while lo.size:
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = mid[:, None] + half[:, None] * _NODES
        kind = kinds[owner][:, None]
        anchor = anchors[owner][:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = t / (1.0 - t)
            jac_inf = 1.0 / (1.0 - t) ** 2
        x = np.where(kind == _FINITE, t, np.where(kind == _RIGHT, anchor + s, anchor - s))
        jac = np.where(kind == _FINITE, 1.0, jac_inf)
        fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape) * jac
        evaluations += fx.size
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("integrand is not finite on the integration range",
                                  value=float(values.sum()), error_estimate=math.inf)
        kron = half * (fx @ _KRONROD_W)
        gauss = half * (fx @ _GAUSS_W)
        mean = (fx @ _KRONROD_W) / 2.0
        resasc = half * (np.abs(fx - mean[:, None]) @ _KRONROD_W)
        resabs = half * (np.abs(fx) @ _KRONROD_W)
        diff = np.abs(kron - gauss)
        with np.errstate(divide="ignore", invalid="ignore"):
            err = np.where(resasc > 0,
                           resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5),
                           diff)
        roundoff = 50.0 * _EPS * resabs
        err = np.maximum(err, roundoff)

        running_total = float(values.sum() + kron.sum())
        tol = max(abs_tol, rel_tol * abs(running_total))
        budget = tol * (hi - lo) / total_width
        # an interval too narrow to bisect is accepted with whatever error it has
        unsplittable = half <= 4.0 * _EPS * np.maximum(np.abs(mid), 1e-300)
        done = (err <= budget) | (err <= roundoff) | unsplittable
        np.add.at(values, owner[done], kron[done])
        np.add.at(errors, owner[done], err[done])

        keep = ~done
        if not np.any(keep):
            break
        if lo.size + np.count_nonzero(keep) > max_intervals:
            partial = float(values.sum() + kron[keep].sum())
            raise QuadratureError(
                "adaptive quadrature exceeded its subinterval budget",
                value=partial, error_estimate=float(errors.sum() + err[keep].sum()))
        lo_k, hi_k, mid_k, own_k = lo[keep], hi[keep], mid[keep], owner[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        owner = np.concatenate([own_k, own_k])
    return values, errors, evaluations


def integrate(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
              abs_tol: float = QUAD_ABS_TOL, rel_tol: float = QUAD_REL_TOL,
              breakpoints: Sequence[float] = (),
              max_intervals: int = QUAD_MAX_INTERVALS) -> QuadratureResult:
    """Adaptive 7/15-point Gauss-Kronrod quadrature of f over (a, b).

    ``f`` must accept a 1-d array of abscissae and return values of the same
    shape; every refinement pass evaluates all open subintervals in a single
    call. Infinite endpoints are mapped onto [0, 1) with x = p + t/(1-t).
    ``breakpoints`` (e.g. a derivative kink) become subinterval edges so that
    no Kronrod panel straddles them.

    Raises QuadratureError, carrying the partial estimate, when the
    subinterval budget is exhausted.
    """
    if not abs_tol > 0:
        raise DomainError("abs_tol must be positive")
    a, b = float(a), float(b)
    if a == b:
        return QuadratureResult(0.0, 0.0, 1)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    values, errors, nevals = _adaptive_gk(f, _pieces(a, b, breakpoints),
                                          abs_tol, rel_tol, max_intervals)
    return QuadratureResult(sign * float(values.sum()), float(errors.sum()), int(nevals))


def integrate_pieces(f: Callable[[np.ndarray], np.ndarray], edges: Sequence[float],
                     abs_tol: float = QUAD_ABS_TOL, rel_tol: float = QUAD_REL_TOL,
                     max_intervals: int = QUAD_MAX_INTERVALS):
    """Integrals of f over each consecutive pair of ``edges`` (ascending).

    Returns ``(values, error_estimates)`` arrays of length ``len(edges) - 1``.
    All panels are refined together, so this is much cheaper than one
    :func:`integrate` call per piece when there are many short pieces.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise DomainError("need at least two edges")
    if np.any(np.diff(edges) < 0):
        raise DomainError("edges must be ascending")
    pieces = list(zip(edges[:-1].tolist(), edges[1:].tolist()))
    nonempty = [i for i, (p, q) in enumerate(pieces) if p < q]
    values = np.zeros(len(pieces))
    errors = np.zeros(len(pieces))
    if nonempty:
        v, e, _ = _adaptive_gk(f, [pieces[i] for i in nonempty], abs_tol, rel_tol,
                               max(max_intervals, 4 * len(nonempty)))
        values[nonempty] = v
        errors[nonempty] = e
    return values, errors
