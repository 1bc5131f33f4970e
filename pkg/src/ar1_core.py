"""
===============================================================================
AR(1) CORE - SIMULATION, CONDITIONAL OLS/ML FIT, LIKELIHOOD
===============================================================================
Zero-mean AR(1):  x_t = rho * x_{t-1} + u_t,  u_t ~ N(0, sigma^2) i.i.d.

Every likelihood conditions on the initial value x0, which is stored apart
from the T sample values. Quantities shared by all the tests:

    Q      = sum x_{t-1}^2
    rho    = sum x_t x_{t-1} / Q          (OLS = conditional ML)
    sse1   = sum (x_t - rho_hat x_{t-1})^2
    sse0   = sum (x_t - x_{t-1})^2       (restricted, rho = 1)
    S(rho) = sse1 + (rho - rho_hat)^2 Q
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.signal import lfilter

from errors import DegenerateSeriesError, InvalidArgumentError, NumericFailureError, PerfectFitError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

# sse1 below this fraction of the series energy counts as an exact fit
PERFECT_FIT_RTOL = 1e-28

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


# =============================================================================
# RANDOM STREAMS
# =============================================================================

def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """
    Independent stream for (master_seed, key...). Philox is counter based, so
    the stream for one replication never depends on how many ran before it.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=key)))


def _as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return derive_rng(int(seed))


# =============================================================================
# DOMAIN TYPES
# =============================================================================

@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered observations plus the initial value they condition on"""

    x0: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 2:
            raise InvalidArgumentError(f"Series needs at least 2 observations after x0, got {values.size}")
        if not math.isfinite(float(self.x0)) or not np.all(np.isfinite(values)):
            raise InvalidArgumentError("Series contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, 'x0', float(self.x0))
        object.__setattr__(self, 'values', values)

    @property
    def T(self) -> int:
        return int(self.values.size)

    @property
    def lagged(self) -> np.ndarray:
        """x_{t-1} for t = 1..T"""
        return np.concatenate(([self.x0], self.values[:-1]))

    def scaled(self, c: float) -> 'TimeSeries':
        return TimeSeries(self.x0 * c, self.values * c)

    @classmethod
    def from_levels(cls, levels: Sequence[float]) -> 'TimeSeries':
        """First observation becomes x0, the rest form the sample"""
        levels = np.asarray(levels, dtype=float).ravel()
        if levels.size < 3:
            raise InvalidArgumentError(f"Need at least 3 levels (x0 plus 2 observations), got {levels.size}")
        return cls(levels[0], levels[1:])


@dataclass(frozen=True)
class Ar1Fit:
    """Conditional OLS/ML summary of an AR(1) fit"""

    rho_hat: float
    Q: float
    sse1: float
    sse0: float
    sigma2_ml: float
    sigma2_ols: float
    s_rho: float
    loglik1: float
    loglik0: float
    T: int

    @property
    def df_stat(self) -> float:
        """(rho_hat - 1) / s_rho; the 'tau' used for SVD is its negation"""
        return (self.rho_hat - 1.0) / self.s_rho

    @property
    def sse_ratio(self) -> float:
        """sse0 / sse1 = sigma0^2 / sigma_hat^2 under the ML convention"""
        return self.sse0 / self.sse1

    def S(self, rho: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Residual sum of squares at rho via the quadratic identity"""
        return self.sse1 + (np.asarray(rho) - self.rho_hat) ** 2 * self.Q


# =============================================================================
# OPERATIONS
# =============================================================================

def simulate_ar1(rho: float, T: int, x0: float = 0.0, sigma: float = 1.0,
                 seed: SeedLike = 0) -> TimeSeries:
    """
    Simulate T observations of x_t = rho x_{t-1} + u_t after x0.

    Deterministic given seed. An int seed is routed through derive_rng so
    simulate_ar1(..., seed=s) and derive_rng(s) produce the same draws.
    """
    for name, value in (('rho', rho), ('x0', x0), ('sigma', sigma)):
        if not math.isfinite(value):
            raise InvalidArgumentError(f"{name} must be finite, got {value}")
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    if int(T) != T or T < 2:
        raise InvalidArgumentError(f"T must be an integer >= 2, got {T}")

    rng = _as_generator(seed)
    shocks = sigma * rng.standard_normal(int(T))
    values, _ = lfilter([1.0], [1.0, -rho], shocks, zi=[rho * x0])
    return TimeSeries(x0, values)


def sum_sq_residuals(series: TimeSeries, rho: float) -> float:
    """S(rho) evaluated directly from the data"""
    resid = series.values - rho * series.lagged
    return float(resid @ resid)


def fit_ar1(series: TimeSeries) -> Ar1Fit:
    """
    Conditional OLS fit. Raises DegenerateSeriesError when Q = 0 and
    PerfectFitError when the recursion fits exactly (sigma undefined).
    """
    x = series.values
    lag = series.lagged
    T = series.T

    Q = float(lag @ lag)
    if Q <= 0.0:
        raise DegenerateSeriesError("Degenerate series: all lagged values are zero (Q = 0)")

    rho_hat = float(x @ lag) / Q
    sse1 = sum_sq_residuals(series, rho_hat)
    sse0 = sum_sq_residuals(series, 1.0)

    energy = float(x @ x) + series.x0 ** 2
    if sse1 <= PERFECT_FIT_RTOL * energy:
        raise PerfectFitError(f"Perfect fit at rho_hat={rho_hat:.6g}: residual variance is zero")

    if sse1 > sse0 * (1.0 + 1e-12):
        raise NumericFailureError(f"OLS residuals exceed restricted residuals (sse1={sse1!r}, sse0={sse0!r})")
    # rho_hat == 1 up to rounding
    sse1 = min(sse1, sse0)

    sigma2_ml = sse1 / T
    sigma2_ols = sse1 / (T - 1)
    s_rho = math.sqrt(sigma2_ols / Q)

    loglik1 = -0.5 * T * (LOG_2PI + math.log(sigma2_ml)) - 0.5 * T
    loglik0 = -0.5 * T * (LOG_2PI + math.log(sse0 / T)) - 0.5 * T

    return Ar1Fit(
        rho_hat=rho_hat, Q=Q, sse1=sse1, sse0=sse0,
        sigma2_ml=sigma2_ml, sigma2_ols=sigma2_ols, s_rho=s_rho,
        loglik1=loglik1, loglik0=loglik0, T=T,
    )


def loglik_at(series: TimeSeries, rho: float, sigma: float) -> float:
    """log L(x | rho, sigma, x0)"""
    if not sigma > 0:
        raise InvalidArgumentError(f"sigma must be positive, got {sigma}")
    T = series.T
    return -0.5 * T * LOG_2PI - T * math.log(sigma) - sum_sq_residuals(series, rho) / (2.0 * sigma * sigma)
