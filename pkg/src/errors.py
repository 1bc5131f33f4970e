"""
===============================================================================
ERRORS - UNIT ROOT TOOLKIT
===============================================================================
Exception hierarchy shared by every module. The CLI maps these onto exit
codes: input problems exit with 2, numerical failures with 1.
"""

from typing import Optional


class UnitRootError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1


class InvalidArgumentError(UnitRootError, ValueError):
    """Non-finite or out-of-range parameter"""

    exit_code = 2


class DegenerateSeriesError(UnitRootError):
    """Series carries no information for the requested quantity (Q = 0, SSE0 = 0)"""

    exit_code = 2


class PerfectFitError(DegenerateSeriesError):
    """Unrestricted residual sum of squares is zero, sigma is undefined"""


class NumericFailureError(UnitRootError):
    """Quadrature did not converge or an internal identity was violated"""

    exit_code = 1


class BoundaryModeError(NumericFailureError):
    """Laplace expansion point lies on (or outside) the prior support"""


class DataFormatError(UnitRootError):
    """CSV content does not parse under the requested schema"""

    exit_code = 2

    def __init__(self, message: str, row: Optional[int] = None,
                 column: Optional[str] = None, source: str = 'LOCAL_CSV'):
        self.row = row
        self.column = column
        self.source = source
        where = []
        if row is not None:
            where.append(f"row={row}")
        if column is not None:
            where.append(f"column={column}")
        where.append(f"source={source}")
        super().__init__(f"{message} ({', '.join(where)})")


class FetchError(UnitRootError):
    """Remote download failed"""

    exit_code = 2

    def __init__(self, message: str, status_code: Optional[int] = None):
        self.status_code = status_code
        guidance = "retry later or run with a local CSV via --data"
        super().__init__(f"{message}; {guidance}")
