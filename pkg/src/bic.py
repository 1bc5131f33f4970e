"""
===============================================================================
BIC APPROXIMATION OF THE UNIT ROOT BAYES FACTOR
===============================================================================
H0: rho = 1 (d0 = 1 free parameter, sigma) against H1: rho unrestricted
(d1 = 2, rho and sigma). With n = T conditional likelihood contributions,

    BIC_k      = d_k log T - 2 loglik_k
    dBIC_01    = BIC_0 - BIC_1 = T log(SSE0 / SSE1) + (d0 - d1) log T
    log B01   ~= -dBIC_01 / 2

so a positive dBIC_01 is evidence against the unit root.
"""

import logging
import math
from dataclasses import dataclass

from ar1_core import Ar1Fit, TimeSeries, fit_ar1
from errors import InvalidArgumentError, NumericFailureError, PerfectFitError
from evidence import Evidence, EvidenceMethod

logger = logging.getLogger(__name__)

D0 = 1
D1 = 2
IDENTITY_RTOL = 1e-8


@dataclass(frozen=True)
class BicResult:
    bic0: float
    bic1: float
    delta_bic_01: float
    evidence: Evidence
    d0: int = D0
    d1: int = D1
    n: int = 0
    via_tstat: float = math.nan

    def to_dict(self):
        return {
            'bic0': self.bic0,
            'bic1': self.bic1,
            'delta_bic_01': self.delta_bic_01,
            'delta_bic_tstat': self.via_tstat,
            'n': self.n,
            **self.evidence.to_dict(),
        }


def bic_of_fit(fit: Ar1Fit, restricted: bool) -> float:
    """d log T - 2 loglik for the restricted (rho = 1) or unrestricted model"""
    sse = fit.sse0 if restricted else fit.sse1
    if sse <= 0.0:
        raise PerfectFitError("BIC undefined: zero residual sum of squares")
    d, loglik = (D0, fit.loglik0) if restricted else (D1, fit.loglik1)
    return d * math.log(fit.T) - 2.0 * loglik


def bic_from_tstat(t: float, T: int) -> float:
    """
    t^2 - log T: the t-statistic shortcut to dBIC_01 (approx. 2 log B10)
    for nested models one parameter apart
    """
    if T < 2:
        raise InvalidArgumentError(f"T must be >= 2, got {T}")
    return t * t - math.log(T)


def bic_test(series: TimeSeries, prior_odds: float = 1.0) -> BicResult:
    fit = fit_ar1(series)
    T = fit.T

    bic0 = bic_of_fit(fit, restricted=True)
    bic1 = bic_of_fit(fit, restricted=False)
    delta = bic0 - bic1

    # same quantity through the SSE ratio
    delta_sse = T * math.log(fit.sse0 / fit.sse1) + (D0 - D1) * math.log(T)
    if abs(delta - delta_sse) > IDENTITY_RTOL * max(1.0, abs(delta)):
        raise NumericFailureError(
            f"BIC routes disagree: likelihood {delta!r} vs SSE ratio {delta_sse!r}")

    evidence = Evidence.capped(-0.5 * delta, EvidenceMethod.BIC, prior_odds)
    return BicResult(
        bic0=bic0, bic1=bic1, delta_bic_01=delta, evidence=evidence,
        n=T, via_tstat=bic_from_tstat(fit.df_stat, T),
    )
