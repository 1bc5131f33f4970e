"""
===============================================================================
ADAPTIVE GAUSS-LEGENDRE QUADRATURE IN LOG SPACE
===============================================================================
Integrates exp(log_f) over [a, b] and returns the log of the integral.
Panels are bisected until the 20-point rule on the panel and on its two
halves agree to the relative tolerance; panel contributions are combined
with log-sum-exp, so integrands far below the float range stay usable.
"""

import logging
import math
from typing import Callable, Iterable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import logsumexp

from errors import InvalidArgumentError, NumericFailureError

logger = logging.getLogger(__name__)

GL_ORDER = 20
EDGE_MERGE_TOL = 1e-12
_NODES, _WEIGHTS = leggauss(GL_ORDER)
_LOG_WEIGHTS = np.log(_WEIGHTS)

LogIntegrand = Callable[[np.ndarray], np.ndarray]


def _panel(log_f: LogIntegrand, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    if half <= 0.0:
        return -math.inf
    x = 0.5 * (a + b) + half * _NODES
    values = np.asarray(log_f(x), dtype=float)
    if np.any(np.isnan(values)):
        raise NumericFailureError(f"log integrand is NaN on [{a}, {b}]")
    return float(logsumexp(_LOG_WEIGHTS + values)) + math.log(half)


def _merge_close(edges: list) -> list:
    """Drop edges within EDGE_MERGE_TOL (relative) of the previous kept edge; the last edge always stays."""
    merged = [edges[0]]
    for x in edges[1:-1]:
        if x - merged[-1] > EDGE_MERGE_TOL * max(1.0, abs(x)):
            merged.append(x)
    last = edges[-1]
    while len(merged) > 1 and last - merged[-1] <= EDGE_MERGE_TOL * max(1.0, abs(last)):
        merged.pop()
    merged.append(last)
    return merged


def log_integrate(log_f: LogIntegrand, a: float, b: float, rtol: float = 1e-9,
                  breaks: Optional[Iterable[float]] = None,
                  initial_panels: int = 8, max_depth: int = 50) -> float:
    """
    log of the integral of exp(log_f(x)) over [a, b].

    log_f must accept a 1-D array of nodes. breaks (points inside (a, b),
    e.g. a mode or a kink) start as panel edges. Panels whose contribution is
    below rtol * 1e-6 of the running total are accepted without refinement.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise InvalidArgumentError(f"integration limits must be finite, got [{a}, {b}]")
    if a == b:
        return -math.inf
    if a > b:
        raise InvalidArgumentError(f"lower limit {a} exceeds upper limit {b}")

    edges = set(np.linspace(a, b, initial_panels + 1).tolist())
    if breaks is not None:
        edges.update(float(x) for x in breaks if a < x < b)
    edges = _merge_close(sorted(edges))

    stack = [(lo, hi, _panel(log_f, lo, hi), 0) for lo, hi in zip(edges[:-1], edges[1:])]
    log_total = float(logsumexp([item[2] for item in stack]))
    log_negligible = log_total + math.log(rtol) - math.log(1e6)

    accepted = []
    while stack:
        lo, hi, coarse, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # panel is one ulp wide
            accepted.append(coarse)
            continue
        left = _panel(log_f, lo, mid)
        right = _panel(log_f, mid, hi)
        fine = float(np.logaddexp(left, right))

        if fine == -math.inf and coarse == -math.inf:
            continue
        if fine <= log_negligible and coarse <= log_negligible:
            accepted.append(fine)
            continue

        rel_err = abs(math.expm1(coarse - fine)) if math.isfinite(coarse) else math.inf
        if rel_err <= rtol:
            accepted.append(fine)
            continue

        if depth >= max_depth:
            raise NumericFailureError(
                f"quadrature did not converge on [{lo}, {hi}] (rel_err={rel_err:.3g}, depth={depth})")

        stack.append((lo, mid, left, depth + 1))
        stack.append((mid, hi, right, depth + 1))

    if not accepted:
        return -math.inf
    return float(logsumexp(accepted))
