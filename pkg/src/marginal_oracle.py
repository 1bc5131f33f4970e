"""
===============================================================================
MARGINAL LIKELIHOOD ORACLE AND LAPLACE APPROXIMATIONS
===============================================================================
Reference marginal likelihoods for H0: rho = 1 and H1: rho ~ pi(rho), with
sigma integrated analytically against pi(sigma) ~ 1/sigma:

    int L(x | rho, sigma) / sigma dsigma = c(T) S(rho)^(-T/2)
    c(T) = log Gamma(T/2) - log 2 - (T/2) log pi        (on the log scale)

H1 leaves a one-dimensional integral over rho, done by adaptive log-space
quadrature. The constant c(T) is kept so both marginals are on one scale;
the improper 1/sigma constant cancels in every reported ratio.

The Laplace variants approximate the same H1 marginal by a Gaussian
expansion in (rho, sigma) at the posterior mode or at the MLE.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from ar1_core import Ar1Fit, TimeSeries, fit_ar1, loglik_at, sum_sq_residuals
from errors import BoundaryModeError, DegenerateSeriesError, InvalidArgumentError, NumericFailureError
from evidence import Evidence, EvidenceMethod
from quadrature import log_integrate

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100


class PriorKind(str, Enum):
    SVD_UNIFORM = 'SVD_UNIFORM'
    CUSTOM_GRID = 'CUSTOM_GRID'


class LaplaceVariant(str, Enum):
    POSTERIOR_MODE = 'POSTERIOR_MODE'
    MLE_OBSERVED = 'MLE_OBSERVED'
    MLE_EXPECTED = 'MLE_EXPECTED'


@dataclass(frozen=True)
class PriorSpec:
    """
    SVD_UNIFORM: rho uniform on [a, 1). CUSTOM_GRID: log prior tabulated on an
    increasing rho grid, linearly interpolated and normalized over the grid.
    """

    kind: PriorKind = PriorKind.SVD_UNIFORM
    a: float = -1.0
    grid_rho: Optional[np.ndarray] = field(default=None, compare=False)
    grid_log_prior: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == PriorKind.SVD_UNIFORM:
            if not (math.isfinite(self.a) and self.a < 1.0):
                raise InvalidArgumentError(f"prior lower bound must be finite and < 1, got {self.a}")
        else:
            if self.grid_rho is None or self.grid_log_prior is None:
                raise InvalidArgumentError("CUSTOM_GRID prior needs grid_rho and grid_log_prior")
            rho = np.asarray(self.grid_rho, dtype=float)
            logp = np.asarray(self.grid_log_prior, dtype=float)
            if rho.shape != logp.shape or rho.size < 2 or np.any(np.diff(rho) <= 0):
                raise InvalidArgumentError("CUSTOM_GRID needs matching, strictly increasing grids")
            if np.any(np.isnan(logp)):
                raise InvalidArgumentError("CUSTOM_GRID log prior contains NaN")

    @property
    def bounds(self):
        if self.kind == PriorKind.SVD_UNIFORM:
            return self.a, 1.0
        return float(self.grid_rho[0]), float(self.grid_rho[-1])

    def log_density(self) -> Callable[[np.ndarray], np.ndarray]:
        """Normalized log prior density on its support"""
        if self.kind == PriorKind.SVD_UNIFORM:
            log_width = math.log1p(-self.a)
            return lambda rho: np.full(np.shape(rho), -log_width)

        rho_grid = np.asarray(self.grid_rho, dtype=float)
        logp_grid = np.asarray(self.grid_log_prior, dtype=float)

        def raw(rho):
            return np.interp(rho, rho_grid, logp_grid)

        log_norm = log_integrate(raw, rho_grid[0], rho_grid[-1], breaks=rho_grid[1:-1])
        return lambda rho: raw(rho) - log_norm


def _log_const(T: int) -> float:
    return float(gammaln(0.5 * T)) - math.log(2.0) - 0.5 * T * math.log(math.pi)


def _breaks(fit: Ar1Fit):
    return [fit.rho_hat + k * fit.s_rho for k in (-12, -6, -3, -1, 0, 1, 3, 6, 12)]


# =============================================================================
# EXACT MARGINALS
# =============================================================================

def log_marginal_h0(series: TimeSeries) -> float:
    """log of int L(x | rho=1, sigma) sigma^-1 dsigma"""
    sse0 = sum_sq_residuals(series, 1.0)
    if sse0 <= 0.0:
        raise DegenerateSeriesError("Restricted residual sum of squares is zero")
    return _log_const(series.T) - 0.5 * series.T * math.log(sse0)


def log_marginal_h1(series: TimeSeries, prior: PriorSpec = PriorSpec()) -> float:
    """log of int int L(x | rho, sigma) pi(rho) sigma^-1 drho dsigma"""
    fit = fit_ar1(series)
    T = fit.T
    log_prior = prior.log_density()
    lo, hi = prior.bounds

    def log_integrand(rho):
        return log_prior(rho) - 0.5 * T * np.log(fit.S(rho))

    log_int = log_integrate(log_integrand, lo, hi, breaks=_breaks(fit))
    if not math.isfinite(log_int):
        raise NumericFailureError("H1 marginal integral vanished on the prior support")
    return _log_const(T) + log_int


def log_bf_oracle(series: TimeSeries, prior: PriorSpec = PriorSpec(), prior_odds: float = 1.0) -> Evidence:
    """Exact log B01 by quadrature"""
    return Evidence.capped(log_marginal_h0(series) - log_marginal_h1(series, prior),
                           EvidenceMethod.ORACLE, prior_odds)


# =============================================================================
# LAPLACE
# =============================================================================

def laplace_log_integral(log_f: float, mode: np.ndarray, neg_hessian: np.ndarray) -> float:
    """
    log of the Gaussian approximation to int exp(g): g(mode) + (d/2) log 2pi
    - 1/2 log det(-H). log_f is g evaluated at the mode.
    """
    neg_hessian = np.atleast_2d(np.asarray(neg_hessian, dtype=float))
    d = np.atleast_1d(mode).size
    if neg_hessian.shape != (d, d):
        raise InvalidArgumentError(f"Hessian shape {neg_hessian.shape} does not match dimension {d}")
    sign, logdet = np.linalg.slogdet(neg_hessian)
    if sign <= 0 or np.any(np.linalg.eigvalsh(0.5 * (neg_hessian + neg_hessian.T)) <= 0):
        raise NumericFailureError("Hessian is not negative definite at the expansion point")
    return float(log_f) + 0.5 * d * LOG_2PI - 0.5 * logdet


def _log_posterior_kernel(series: TimeSeries, fit: Ar1Fit, log_prior_width: float):
    """g(rho, sigma) = loglik - log sigma + log pi(rho), and its derivatives"""
    T, Q = fit.T, fit.Q

    def g(theta):
        rho, sigma = theta
        return loglik_at(series, rho, sigma) - math.log(sigma) - log_prior_width

    def grad(theta):
        rho, sigma = theta
        S = fit.S(rho)
        return np.array([-Q * (rho - fit.rho_hat) / sigma ** 2,
                         -(T + 1) / sigma + S / sigma ** 3])

    def hess(theta):
        rho, sigma = theta
        S = fit.S(rho)
        cross = 2.0 * Q * (rho - fit.rho_hat) / sigma ** 3
        return np.array([[-Q / sigma ** 2, cross],
                         [cross, (T + 1) / sigma ** 2 - 3.0 * S / sigma ** 4]])

    return g, grad, hess


def _newton_mode(g, grad, hess, start: np.ndarray) -> np.ndarray:
    """Safeguarded Newton ascent: step halving, sigma kept positive"""
    theta = np.array(start, dtype=float)
    value = g(theta)
    for _ in range(NEWTON_MAX_ITER):
        H = hess(theta)
        step = -np.linalg.solve(H, grad(theta))
        if not np.all(np.isfinite(step)):
            raise NumericFailureError("Newton step is not finite")

        scale = 1.0
        while True:
            candidate = theta + scale * step
            if candidate[1] > 0:
                new_value = g(candidate)
                if new_value >= value - 1e-12 * abs(value):
                    break
            scale *= 0.5
            if scale < 1e-12:
                raise NumericFailureError("Newton line search failed")

        converged = np.all(np.abs(candidate - theta) <= NEWTON_TOL * np.maximum(1.0, np.abs(theta)))
        theta, value = candidate, new_value
        if converged:
            return theta
    raise NumericFailureError("posterior mode search did not converge")


def log_marginal_laplace(series: TimeSeries, prior: PriorSpec = PriorSpec(),
                         variant: LaplaceVariant = LaplaceVariant.POSTERIOR_MODE) -> float:
    """Laplace approximation to log_marginal_h1 under the uniform SVD prior"""
    if prior.kind != PriorKind.SVD_UNIFORM:
        raise InvalidArgumentError("Laplace approximation is implemented for the SVD_UNIFORM prior")

    fit = fit_ar1(series)
    T = fit.T
    if not prior.a <= fit.rho_hat < 1.0:
        raise BoundaryModeError(
            f"rho_hat={fit.rho_hat:.6g} is not interior to the prior support [{prior.a}, 1)")

    log_width = math.log1p(-prior.a)
    g, grad, hess = _log_posterior_kernel(series, fit, log_width)

    if variant == LaplaceVariant.POSTERIOR_MODE:
        mode = _newton_mode(g, grad, hess, [fit.rho_hat, math.sqrt(fit.sigma2_ml)])
        if not prior.a <= mode[0] < 1.0:
            raise BoundaryModeError(f"posterior mode rho={mode[0]:.6g} is outside [{prior.a}, 1)")
        return laplace_log_integral(g(mode), mode, -hess(mode))

    sigma2 = fit.sigma2_ml
    mle = np.array([fit.rho_hat, math.sqrt(sigma2)])

    if variant == LaplaceVariant.MLE_OBSERVED:
        info = np.diag([fit.Q / sigma2, 2.0 * T / sigma2])
        return laplace_log_integral(g(mle), mle, info)

    if variant == LaplaceVariant.MLE_EXPECTED:
        if abs(fit.rho_hat) >= 1.0:
            raise BoundaryModeError("expected information needs a stationary estimate, |rho_hat| < 1")
        per_obs = np.diag([1.0 / (1.0 - fit.rho_hat ** 2), 2.0 / sigma2])
        return laplace_log_integral(g(mle), mle, T * per_obs)

    raise InvalidArgumentError(f"unknown Laplace variant {variant}")


def _log_marginal_h0_laplace(series: TimeSeries, fit: Ar1Fit, variant: LaplaceVariant) -> float:
    """One-dimensional expansion in sigma at rho = 1"""
    T = fit.T
    if variant == LaplaceVariant.POSTERIOR_MODE:
        sigma2 = fit.sse0 / (T + 1)
        curvature = 2.0 * (T + 1) / sigma2
    else:
        sigma2 = fit.sse0 / T
        curvature = 2.0 * T / sigma2
    sigma = math.sqrt(sigma2)
    log_f = loglik_at(series, 1.0, sigma) - math.log(sigma)
    return laplace_log_integral(log_f, np.array([sigma]), np.array([[curvature]]))


def log_bf_laplace(series: TimeSeries, prior: PriorSpec = PriorSpec(),
                   variant: LaplaceVariant = LaplaceVariant.POSTERIOR_MODE,
                   prior_odds: float = 1.0) -> Evidence:
    """Laplace approximation to log B01 with the prior fully specified"""
    fit = fit_ar1(series)
    log_m0 = _log_marginal_h0_laplace(series, fit, variant)
    log_m1 = log_marginal_laplace(series, prior, variant)
    return Evidence.capped(log_m0 - log_m1, EvidenceMethod.LAPLACE, prior_odds)


def relative_error(approx: float, exact: float) -> float:
    """|approx - exact| / |exact| of two log quantities"""
    if exact == 0.0:
        return math.inf if approx != 0.0 else 0.0
    return abs(approx - exact) / abs(exact)

