"""
===============================================================================
STUDENT-T DISTRIBUTION IN LOG SPACE
===============================================================================
CDF through the regularized incomplete beta function, quantile by
safeguarded Newton iteration with bisection fallback. Tails are handled on
the log scale so posterior odds stay finite far from the bulk.
"""

import math

from scipy.special import betainc, betaln, gammaln

from errors import InvalidArgumentError, NumericFailureError

LOG_HALF = math.log(0.5)
QUANTILE_TOL = 1e-12
MAX_ITER = 500


def log_c_t(T: int) -> float:
    """log C_T = log[Gamma((T-1)/2) Gamma(1/2) / Gamma(T/2)]"""
    if T < 2:
        raise InvalidArgumentError(f"T must be >= 2, got {T}")
    return float(gammaln(0.5 * (T - 1)) + gammaln(0.5) - gammaln(0.5 * T))


def t_logpdf(x: float, nu: float) -> float:
    return float(gammaln(0.5 * (nu + 1)) - gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi)
                 - 0.5 * (nu + 1) * math.log1p(x * x / nu))


def _log_lower_tail(x: float, nu: float) -> float:
    """log F(x) for x <= 0"""
    a, b = 0.5 * nu, 0.5
    z = nu / (nu + x * x)
    value = float(betainc(a, b, z))
    if value > 0.0:
        return LOG_HALF + math.log(value)
    # leading term of I_z(a, b) as z -> 0
    return LOG_HALF + a * math.log(z) + b * math.log1p(-z) - math.log(a) - float(betaln(a, b))


def t_logcdf(x: float, nu: float) -> float:
    """log F(x; nu)"""
    if nu <= 0:
        raise InvalidArgumentError(f"degrees of freedom must be positive, got {nu}")
    if math.isnan(x):
        raise InvalidArgumentError("t_logcdf of NaN")
    if x == -math.inf:
        return -math.inf
    if x == math.inf:
        return 0.0
    if x <= 0.0:
        return _log_lower_tail(x, nu)
    return math.log1p(-math.exp(_log_lower_tail(-x, nu)))


def t_logsf(x: float, nu: float) -> float:
    """log(1 - F(x; nu))"""
    return t_logcdf(-x, nu)


def t_cdf(x: float, nu: float) -> float:
    if x <= 0.0:
        return math.exp(t_logcdf(x, nu))
    return 1.0 - math.exp(t_logcdf(-x, nu))


def log_t_interval_mass(lo: float, hi: float, nu: float) -> float:
    """log[F(hi) - F(lo)] without cancellation in either tail"""
    if not lo < hi:
        return -math.inf
    if hi <= 0.0:
        log_hi, log_lo = t_logcdf(hi, nu), t_logcdf(lo, nu)
        return log_hi + math.log1p(-math.exp(log_lo - log_hi))
    if lo >= 0.0:
        log_lo, log_hi = t_logsf(lo, nu), t_logsf(hi, nu)
        return log_lo + math.log1p(-math.exp(log_hi - log_lo))
    # straddles zero: both halves are at least as large as their own tails
    left = 0.5 - math.exp(t_logcdf(lo, nu))
    right = 0.5 - math.exp(t_logsf(hi, nu))
    return math.log(left + right)


def _lower_quantile(log_p: float, nu: float) -> float:
    """Solve log F(q) = log_p for q <= 0"""
    if log_p >= LOG_HALF:
        return 0.0

    lo, hi = -1.0, 0.0
    while t_logcdf(lo, nu) > log_p:
        hi = lo
        lo *= 2.0
        if lo < -1e300:
            raise NumericFailureError(f"t quantile bracket failed for log_p={log_p}, nu={nu}")

    q = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        log_f = t_logcdf(q, nu)
        g = log_f - log_p
        if g > 0:
            hi = q
        else:
            lo = q

        slope = math.exp(t_logpdf(q, nu) - log_f)
        candidate = q - g / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo < candidate < hi:
            candidate = 0.5 * (lo + hi)

        if abs(candidate - q) <= QUANTILE_TOL * max(1.0, abs(candidate)):
            return candidate
        if hi - lo <= QUANTILE_TOL * max(1.0, abs(candidate)):
            return 0.5 * (lo + hi)
        q = candidate

    raise NumericFailureError(f"t quantile did not converge for log_p={log_p}, nu={nu}")


def t_quantile_log(log_p: float, nu: float) -> float:
    """F^{-1}(exp(log_p)); log input keeps tiny and near-one p exact"""
    if nu <= 0:
        raise InvalidArgumentError(f"degrees of freedom must be positive, got {nu}")
    if math.isnan(log_p) or log_p > 0.0:
        raise InvalidArgumentError(f"log probability must be <= 0, got {log_p}")
    if log_p == 0.0:
        return math.inf
    if log_p == -math.inf:
        return -math.inf
    if log_p > LOG_HALF:
        return -_lower_quantile(math.log(-math.expm1(log_p)), nu)
    return _lower_quantile(log_p, nu)


def t_quantile(p: float, nu: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return -math.inf
    return t_quantile_log(math.log(p), nu)
