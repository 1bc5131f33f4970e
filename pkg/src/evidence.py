"""
===============================================================================
EVIDENCE - BAYES FACTORS, ODDS AND THE JEFFREYS SCALE
===============================================================================
Every Bayes factor is stored H0-over-H1 (unit root over the alternative) on
the natural-log scale. Negative values are evidence against the unit root.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Tuple

from scipy.special import expit, logit

from errors import InvalidArgumentError

# |log BF01| never exceeds this; larger values are reported saturated
LOG_BF_CAP = 700.0


class EvidenceMethod(str, Enum):
    BIC = 'BIC'
    SVD = 'SVD'
    SVD_STAR = 'SVD_STAR'
    ORACLE = 'ORACLE'
    LAPLACE = 'LAPLACE'


class JeffreysGrade(str, Enum):
    """Jeffreys' categories, each side of BF01 = 1"""

    DECISIVE_H1 = 'decisive against unit root'
    VERY_STRONG_H1 = 'very strong against unit root'
    STRONG_H1 = 'strong against unit root'
    SUBSTANTIAL_H1 = 'substantial against unit root'
    WEAK_H1 = 'barely worth mentioning against unit root'
    NEUTRAL = 'neutral'
    WEAK_H0 = 'barely worth mentioning for unit root'
    SUBSTANTIAL_H0 = 'substantial for unit root'
    STRONG_H0 = 'strong for unit root'
    VERY_STRONG_H0 = 'very strong for unit root'
    DECISIVE_H0 = 'decisive for unit root'


# log10 cut points: BF 3.2, 10, 31.6, 100
_GRADE_CUTS = (
    (2.0, JeffreysGrade.DECISIVE_H0, JeffreysGrade.DECISIVE_H1),
    (1.5, JeffreysGrade.VERY_STRONG_H0, JeffreysGrade.VERY_STRONG_H1),
    (1.0, JeffreysGrade.STRONG_H0, JeffreysGrade.STRONG_H1),
    (0.5, JeffreysGrade.SUBSTANTIAL_H0, JeffreysGrade.SUBSTANTIAL_H1),
)


def saturate(log_bf_01: float) -> Tuple[float, bool]:
    """Clip to +/-LOG_BF_CAP; infinities saturate, NaN is rejected"""
    if math.isnan(log_bf_01):
        raise InvalidArgumentError("log Bayes factor is NaN")
    if abs(log_bf_01) > LOG_BF_CAP:
        return math.copysign(LOG_BF_CAP, log_bf_01), True
    return float(log_bf_01), False


@dataclass(frozen=True)
class Evidence:
    """A log Bayes factor B01 with its prior odds"""

    log_bf_01: float
    method: EvidenceMethod
    prior_odds: float = 1.0
    saturated: bool = False

    def __post_init__(self):
        if not math.isfinite(self.log_bf_01):
            raise InvalidArgumentError(f"log_bf_01 must be finite, got {self.log_bf_01}")
        if not (self.prior_odds > 0 and math.isfinite(self.prior_odds)):
            raise InvalidArgumentError(f"prior_odds must be positive and finite, got {self.prior_odds}")

    @classmethod
    def capped(cls, log_bf_01: float, method: EvidenceMethod, prior_odds: float = 1.0) -> 'Evidence':
        value, saturated = saturate(log_bf_01)
        return cls(value, method, prior_odds, saturated)

    @property
    def bf_01(self) -> float:
        return math.exp(self.log_bf_01)

    @property
    def log_posterior_odds(self) -> float:
        return log_posterior_odds(self)

    @property
    def posterior_prob(self) -> float:
        return posterior_prob(self)

    @property
    def grade(self) -> JeffreysGrade:
        return jeffreys_grade(self)

    def with_prior_odds(self, prior_odds: float) -> 'Evidence':
        """Same Bayes factor under different prior odds"""
        return replace(self, prior_odds=prior_odds)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'method': self.method.value,
            'log_bf_01': self.log_bf_01,
            'prior_odds': self.prior_odds,
            'posterior_prob': self.posterior_prob,
            'grade': self.grade.value,
            'saturated': self.saturated,
        }


def log_posterior_odds(e: Evidence) -> float:
    """log of Pr(H0|x) / Pr(H1|x)"""
    return e.log_bf_01 + math.log(e.prior_odds)


def posterior_prob(e: Evidence) -> float:
    """Pr(H0 | x) = odds / (1 + odds), via the logistic function"""
    return float(expit(log_posterior_odds(e)))


def log_bf_from_prob(prob: float, prior_odds: float = 1.0) -> float:
    """Inverse of posterior_prob: the log BF01 that gives Pr(H0 | x) = prob"""
    if not 0.0 < prob < 1.0:
        raise InvalidArgumentError(f"prob must lie in (0, 1), got {prob}")
    return float(logit(prob)) - math.log(prior_odds)


def jeffreys_grade(e: Evidence) -> JeffreysGrade:
    """Grade of the Bayes factor alone (prior odds do not enter)"""
    if e.log_bf_01 == 0.0:
        return JeffreysGrade.NEUTRAL
    log10_bf = abs(e.log_bf_01) / math.log(10.0)
    favours_h0 = e.log_bf_01 > 0
    for cut, for_h0, for_h1 in _GRADE_CUTS:
        if log10_bf > cut:
            return for_h0 if favours_h0 else for_h1
    return JeffreysGrade.WEAK_H0 if favours_h0 else JeffreysGrade.WEAK_H1
