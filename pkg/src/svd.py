"""
===============================================================================
SCHOTMAN-VAN DIJK POSTERIOR ODDS
===============================================================================
Point mass on rho = 1 against rho uniform on [a, 1), with pi(sigma) ~ 1/sigma.
Integrating sigma and rho analytically leaves Student-t CDF terms with
T - 1 degrees of freedom:

    K1 = C_T^-1 (T-1)^-1/2 (SSE0/SSE1)^-T/2 (1-a)/s [F(u) - F((a-rho)/s)]^-1

with u = (1 - rho_hat)/s_rho. The data-driven variant places the bound a*
so that the flat posterior keeps 1 - alpha of its mass in [a*, 1):

    a* = rho_hat + s F^-1(alpha F(u)),   K1 = C_T^-1 (T-1)^-1/2 (SSE0/SSE1)^-T/2 (u - q)/F(u)

where q = F^-1(alpha F(u)). Everything is assembled on the log scale.
"""

import logging
import math
from dataclasses import dataclass

from ar1_core import Ar1Fit, TimeSeries, fit_ar1
from errors import InvalidArgumentError, NumericFailureError
from evidence import LOG_BF_CAP, Evidence, EvidenceMethod
from student_t import log_c_t, log_t_interval_mass, t_logcdf, t_quantile_log

logger = logging.getLogger(__name__)

# F(u) below exp(-700): the stationary region carries no posterior mass
LOG_F_FLOOR = -LOG_BF_CAP


@dataclass(frozen=True)
class SvdResult:
    evidence: Evidence
    a: float
    alpha: float
    tau: float
    clamped: bool = False
    invalid_interval: bool = False

    def to_dict(self):
        return {
            'a': self.a,
            'alpha': self.alpha,
            'tau': self.tau,
            'clamped': self.clamped,
            'invalid_interval': self.invalid_interval,
            **self.evidence.to_dict(),
        }


def _log_common(T: int, sse0: float, sse1: float) -> float:
    """log of C_T^-1 (T-1)^-1/2 (SSE0/SSE1)^-T/2"""
    return -log_c_t(T) - 0.5 * math.log(T - 1) - 0.5 * T * math.log(sse0 / sse1)


def _fixed_log_bf(fit: Ar1Fit, a: float) -> float:
    s = fit.s_rho
    u = (1.0 - fit.rho_hat) / s
    log_mass = log_t_interval_mass((a - fit.rho_hat) / s, u, fit.T - 1)
    return _log_common(fit.T, fit.sse0, fit.sse1) + math.log1p(-a) - math.log(s) - log_mass


def svd_fixed(series: TimeSeries, a: float = -1.0, prior_odds: float = 1.0) -> SvdResult:
    """Posterior odds with a fixed lower bound a of the stationary region"""
    fit = fit_ar1(series)
    s = fit.s_rho
    upper_a = min(1.0, fit.rho_hat + 30.0 * s)
    if not (math.isfinite(a) and -1.0 <= a < upper_a):
        raise InvalidArgumentError(f"lower bound a={a} outside [-1, {upper_a:.6g})")
    if not (prior_odds > 0 and math.isfinite(prior_odds)):
        raise InvalidArgumentError(f"prior_odds must be positive, got {prior_odds}")

    log_bf = _fixed_log_bf(fit, a)
    evidence = Evidence.capped(log_bf, EvidenceMethod.SVD, prior_odds)
    if evidence.saturated:
        logger.warning(f"SVD evidence saturated at a={a} (log BF01 {log_bf})")
    return SvdResult(evidence=evidence, a=a, alpha=math.nan, tau=(1.0 - fit.rho_hat) / s)


def svd_data_driven(series: TimeSeries, alpha: float = 0.05, prior_odds: float = 1.0) -> SvdResult:
    """Posterior odds with the data-driven lower bound a*"""
    if not 0.0 < alpha < 1.0:
        raise InvalidArgumentError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0.001 <= alpha <= 0.1:
        logger.warning(f"alpha={alpha} outside the usual range [0.001, 0.1]")

    fit = fit_ar1(series)
    s = fit.s_rho
    nu = fit.T - 1
    u = (1.0 - fit.rho_hat) / s

    log_fu = t_logcdf(u, nu)
    if log_fu < LOG_F_FLOOR:
        logger.warning(f"F(u) underflows for u={u:.4g}; SVD* saturated toward the unit root")
        evidence = Evidence(LOG_BF_CAP, EvidenceMethod.SVD_STAR, prior_odds, saturated=True)
        return SvdResult(evidence=evidence, a=1.0, alpha=alpha, tau=u, invalid_interval=True)

    try:
        q = t_quantile_log(math.log(alpha) + log_fu, nu)
    except NumericFailureError:
        logger.warning(f"quantile of alpha*F(u) failed for u={u:.4g}; SVD* saturated toward the unit root")
        evidence = Evidence(LOG_BF_CAP, EvidenceMethod.SVD_STAR, prior_odds, saturated=True)
        return SvdResult(evidence=evidence, a=1.0, alpha=alpha, tau=u, invalid_interval=True)

    a_star = fit.rho_hat + s * q

    if a_star >= 1.0:
        # empty stationary region
        evidence = Evidence(LOG_BF_CAP, EvidenceMethod.SVD_STAR, prior_odds, saturated=True)
        return SvdResult(evidence=evidence, a=a_star, alpha=alpha, tau=u, invalid_interval=True)

    if a_star < -1.0:
        evidence = Evidence.capped(_fixed_log_bf(fit, -1.0), EvidenceMethod.SVD_STAR, prior_odds)
        return SvdResult(evidence=evidence, a=-1.0, alpha=alpha, tau=u, clamped=True)

    log_bf = _log_common(fit.T, fit.sse0, fit.sse1) + math.log(u - q) - log_fu
    evidence = Evidence.capped(log_bf, EvidenceMethod.SVD_STAR, prior_odds)
    return SvdResult(evidence=evidence, a=a_star, alpha=alpha, tau=u)
