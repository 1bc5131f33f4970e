"""
===============================================================================
CONTINUOUS-PRIOR POSTERIORS FOR RHO
===============================================================================
Flat prior (sigma integrated against 1/sigma):

    pi(rho | x)  ~  [R + (rho - rho_hat)^2 Q]^(-T/2)

a t-shaped density symmetric about rho_hat. Jeffreys prior, as in the
posterior display of the information-matrix prior:

    pi(rho | x)  ~  alpha0(rho)^(1/2) [R + (rho - rho_hat)^2 Q]^(-T/2)
    alpha0       =  T/(1 - rho^2) - (1 - rho^(2T))/(1 - rho^2)^2,   alpha0(1) = T(T-1)/2

Densities are evaluated and integrated on the log scale; large T would
otherwise underflow. Curves live on [rho_hat - 12 s, max(1 + 12 s, rho_hat + 12 s)];
the tail probability adds the mass outside it, which the Jeffreys prior
makes heavy on short stationary samples.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from ar1_core import Ar1Fit, TimeSeries, fit_ar1
from errors import InvalidArgumentError, NumericFailureError
from quadrature import log_integrate

logger = logging.getLogger(__name__)

SUPPORT_WIDTH = 12.0
WIDEN_BY = 6.0
WIDEN_TOL = 1e-6
# series in rho^2 - 1 while T |rho^2 - 1| stays below this
ALPHA0_SWITCH = 1.0
HPD_GRID = 4096

ArrayLike = Union[float, np.ndarray]


class PriorKind(str, Enum):
    FLAT = 'FLAT'
    JEFFREYS = 'JEFFREYS'


# =============================================================================
# ALPHA0
# =============================================================================

def _log_alpha0_series(delta: np.ndarray, T: int) -> np.ndarray:
    """alpha0 = sum_j C(T, j+2) delta^j with delta = rho^2 - 1"""
    coef = T * (T - 1) / 2.0
    total = np.full_like(delta, coef)
    term = np.full_like(delta, coef)
    for j in range(40):
        m = j + 2
        if m >= T:
            break
        term = term * delta * (T - m) / (m + 1)
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return np.log(total)


def log_alpha0(rho: ArrayLike, T: int) -> ArrayLike:
    """log alpha0(rho, T), overflow-free for explosive rho"""
    if T < 2:
        raise InvalidArgumentError(f"T must be >= 2, got {T}")
    r = np.asarray(rho, dtype=float)
    r2 = r * r
    out = np.empty_like(r2)

    near = T * np.abs(r2 - 1.0) < ALPHA0_SWITCH
    inside = (r2 < 1.0) & ~near
    outside = (r2 > 1.0) & ~near

    with np.errstate(divide='ignore'):
        if np.any(inside):
            w = 1.0 - r2[inside]
            numerator = T * w + np.expm1(T * np.log(r2[inside]))
            if np.any(numerator <= 0):
                raise NumericFailureError("alpha0 is not positive inside the stationary region")
            out[inside] = np.log(numerator) - 2.0 * np.log(w)
        if np.any(outside):
            w = r2[outside] - 1.0
            L = T * np.log(r2[outside])
            tail = -np.expm1(np.log1p(T * w) - L)
            if np.any(tail <= 0):
                raise NumericFailureError("alpha0 is not positive in the explosive region")
            out[outside] = L - 2.0 * np.log(w) + np.log(tail)
    if np.any(near):
        out[near] = _log_alpha0_series(r2[near] - 1.0, T)

    return out if out.ndim else float(out)


def alpha0(rho: ArrayLike, T: int) -> ArrayLike:
    return np.exp(log_alpha0(rho, T))


# =============================================================================
# POSTERIOR CURVES
# =============================================================================

def _flat_log_density(fit: Ar1Fit) -> Callable[[ArrayLike], ArrayLike]:
    def log_density(rho):
        return -0.5 * fit.T * np.log(fit.S(rho))
    return log_density


def _jeffreys_log_density(fit: Ar1Fit) -> Callable[[ArrayLike], ArrayLike]:
    def log_density(rho):
        return 0.5 * log_alpha0(rho, fit.T) - 0.5 * fit.T * np.log(fit.S(rho))
    return log_density


def log_posterior_flat(series: TimeSeries, rho: ArrayLike) -> ArrayLike:
    """Unnormalized flat-prior log posterior"""
    return _flat_log_density(fit_ar1(series))(rho)


def log_posterior_jeffreys(series: TimeSeries, rho: ArrayLike) -> ArrayLike:
    """Unnormalized Jeffreys-prior log posterior"""
    if series.T < 3:
        raise InvalidArgumentError(f"Jeffreys posterior needs T >= 3, got {series.T}")
    return _jeffreys_log_density(fit_ar1(series))(rho)


@dataclass(frozen=True)
class PosteriorCurve:
    prior_kind: PriorKind
    log_density: Callable[[ArrayLike], ArrayLike]
    support: Tuple[float, float]
    log_norm: float
    fit: Ar1Fit

    def pdf(self, rho: ArrayLike) -> ArrayLike:
        return np.exp(self.log_density(rho) - self.log_norm)

    def log_mass(self, lo: float, hi: float) -> float:
        """log posterior mass of [lo, hi] intersected with the support"""
        lo = max(lo, self.support[0])
        hi = min(hi, self.support[1])
        if lo >= hi:
            return -math.inf
        breaks = [x for x in (self.fit.rho_hat, 1.0) if lo < x < hi]
        return log_integrate(self.log_density, lo, hi, breaks=breaks) - self.log_norm

    def mass(self, lo: float, hi: float) -> float:
        return math.exp(self.log_mass(lo, hi))


def default_support(fit: Ar1Fit, width: float = SUPPORT_WIDTH) -> Tuple[float, float]:
    s = fit.s_rho
    return fit.rho_hat - width * s, max(1.0 + width * s, fit.rho_hat + width * s)


def posterior_curve(series: TimeSeries, prior_kind: PriorKind = PriorKind.JEFFREYS,
                    width: float = SUPPORT_WIDTH) -> PosteriorCurve:
    fit = fit_ar1(series)
    if prior_kind == PriorKind.JEFFREYS:
        if fit.T < 3:
            raise InvalidArgumentError(f"Jeffreys posterior needs T >= 3, got {fit.T}")
        log_density = _jeffreys_log_density(fit)
    else:
        log_density = _flat_log_density(fit)

    lo, hi = default_support(fit, width)
    breaks = [x for x in (fit.rho_hat, 1.0) if lo < x < hi]
    log_norm = log_integrate(log_density, lo, hi, breaks=breaks)
    if not math.isfinite(log_norm):
        raise NumericFailureError("posterior normalizing constant is not finite")
    return PosteriorCurve(PriorKind(prior_kind), log_density, (lo, hi), log_norm, fit)


# =============================================================================
# TAIL PROBABILITY, DECISION RULE
# =============================================================================

def _log_outer_masses(curve: PosteriorCurve) -> Tuple[float, float]:
    """
    Unnormalized log mass below and above the support. Both pieces are
    integrated over v = 1/rho on finite intervals; under the Jeffreys prior
    the density decays only like rho^-2 and has a second mode near
    1/v_star, v_star = rho_hat / (sse1/Q + rho_hat^2).
    """
    fit = curve.fit
    lo, hi = curve.support
    v_star = fit.rho_hat / (fit.sse1 / fit.Q + fit.rho_hat ** 2)

    def log_reciprocal(v):
        v = np.asarray(v, dtype=float)
        return curve.log_density(1.0 / v) - 2.0 * np.log(np.abs(v))

    def reciprocal_mass(a: float, b: float) -> float:
        breaks = [v_star] if a < v_star < b else None
        return log_integrate(log_reciprocal, a, b, breaks=breaks)

    upper = reciprocal_mass(0.0, 1.0 / hi)
    if lo <= -1.0:
        lower = reciprocal_mass(1.0 / lo, 0.0)
    else:
        inner = log_integrate(curve.log_density, -1.0, lo,
                              breaks=[x for x in (fit.rho_hat, 1.0) if -1.0 < x < lo])
        lower = float(np.logaddexp(reciprocal_mass(-1.0, 0.0), inner))
    return lower, upper


def _tail_prob(curve: PosteriorCurve) -> float:
    lo, hi = curve.support
    log_lower, log_upper = _log_outer_masses(curve)

    above = [curve.log_mass(1.0, hi) + curve.log_norm, log_upper]
    if lo > 1.0:
        above.append(log_integrate(curve.log_density, 1.0, lo))

    log_total = float(logsumexp([log_lower, curve.log_norm, log_upper]))
    return min(1.0, math.exp(float(logsumexp(above)) - log_total))


def tail_prob_ge_one(series: TimeSeries, prior_kind: PriorKind = PriorKind.JEFFREYS) -> float:
    """
    Pr(rho >= 1 | x) over the whole real line: quadrature on the support plus
    the exact mass of both outer tails. The result must not move by more than
    1e-6 when the support is widened by another 6 s; NumericFailureError
    otherwise.
    """
    prob = _tail_prob(posterior_curve(series, prior_kind))
    prob_wide = _tail_prob(posterior_curve(series, prior_kind, width=SUPPORT_WIDTH + WIDEN_BY))
    if abs(prob - prob_wide) > WIDEN_TOL:
        raise NumericFailureError(
            f"Pr(rho>=1) not stable under support widening "
            f"({prob:.8f} vs {prob_wide:.8f}, prior={PriorKind(prior_kind).value})")
    return prob


def reject_unit_root(series: TimeSeries, prior_kind: PriorKind = PriorKind.JEFFREYS,
                     threshold: float = 0.05) -> bool:
    """Reject rho >= 1 when its posterior probability falls below threshold"""
    if not 0.0 < threshold < 1.0:
        raise InvalidArgumentError(f"threshold must lie in (0, 1), got {threshold}")
    return tail_prob_ge_one(series, prior_kind) < threshold


# =============================================================================
# CREDIBLE SETS
# =============================================================================

def hpd_interval(series: TimeSeries, prior_kind: PriorKind = PriorKind.JEFFREYS,
                 alpha: float = 0.05) -> List[Tuple[float, float]]:
    """
    Highest posterior density region with mass >= 1 - alpha, as a list of
    disjoint intervals (two when the Jeffreys posterior is bimodal).
    Density-level water-filling on a grid over the support.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")

    curve = posterior_curve(series, prior_kind)
    lo, hi = curve.support
    grid = np.linspace(lo, hi, HPD_GRID)
    log_d = np.asarray(curve.log_density(grid), dtype=float)
    step = grid[1] - grid[0]

    # cell masses on the trapezoid rule, normalized on the grid itself
    log_w = log_d + math.log(step)
    log_w[0] -= math.log(2.0)
    log_w[-1] -= math.log(2.0)
    weights = np.exp(log_w - logsumexp(log_w))

    order = np.argsort(-log_d, kind='stable')
    cumulative = np.cumsum(weights[order])
    cut = int(np.searchsorted(cumulative, 1.0 - alpha))
    level = log_d[order[min(cut, order.size - 1)]]

    inside = log_d >= level
    intervals = []
    start = None
    for i, flag in enumerate(inside):
        if flag and start is None:
            start = i
        if start is not None and (not flag or i == inside.size - 1):
            end = i if flag else i - 1
            intervals.append((float(_crossing(grid, log_d, level, start, left=True)),
                              float(_crossing(grid, log_d, level, end, left=False))))
            start = None
    return intervals


def _crossing(grid: np.ndarray, log_d: np.ndarray, level: float, i: int, left: bool) -> float:
    """Linear interpolation of the level crossing next to grid index i"""
    j = i - 1 if left else i + 1
    if j < 0 or j >= grid.size:
        return grid[i]
    d_in, d_out = log_d[i], log_d[j]
    if d_in == d_out:
        return grid[i]
    frac = (d_in - level) / (d_in - d_out)
    return grid[i] + frac * (grid[j] - grid[i])


def equal_tail_interval(series: TimeSeries, prior_kind: PriorKind = PriorKind.JEFFREYS,
                        alpha: float = 0.05) -> Tuple[float, float]:
    """Connected credible interval with alpha/2 posterior mass in each tail"""
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")

    curve = posterior_curve(series, prior_kind)
    lo, hi = curve.support

    def cdf_minus(target):
        return lambda x: curve.mass(lo, x) - target

    lower = brentq(cdf_minus(0.5 * alpha), lo, hi, xtol=1e-12)
    upper = brentq(cdf_minus(1.0 - 0.5 * alpha), lo, hi, xtol=1e-12)
    return float(lower), float(upper)
