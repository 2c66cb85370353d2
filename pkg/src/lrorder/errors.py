"""Exception hierarchy for the likelihood-ratio-order test toolkit.

Errors are grouped by the stage that raises them: table construction and
parsing, numerical evaluation, and estimation.  CLI exit codes are derived
from these groups (see :mod:`lrorder.cli`).
"""

from __future__ import annotations


class LrOrderError(Exception):
    """Base class for all package errors."""


# -- input data / table construction -----------------------------------------

class InputDataError(LrOrderError):
    """A table or probability vector violates its construction contract."""


class DimensionError(InputDataError):
    """Fewer than two rows or columns."""


class EmptyRowError(InputDataError):
    """A treatment row has total count zero."""


class EmptyColumnError(InputDataError):
    """A response category has total count zero across all rows."""


class NegativeCountError(InputDataError):
    """A cell count is negative or not an integer."""


class ZeroCellError(InputDataError):
    """An operation that needs strictly positive cells met a zero."""


class TableParseError(InputDataError):
    """CSV input could not be parsed; carries 1-based row/column context."""

    def __init__(self, message: str, row: int, col: int | None = None):
        where = f"row {row}" if col is None else f"row {row}, column {col}"
        super().__init__(f"{message} ({where})")
        self.row = row
        self.col = col


class LengthMismatch(InputDataError):
    """Two probability vectors have different lengths."""


class NegativeDelta(InputDataError):
    """The truth-model shift parameter must be nonnegative."""


class MissingBaseline(InputDataError):
    """A report lacks the rows needed to compute relative efficiencies."""


class ConfigError(InputDataError):
    """Invalid run configuration (CLI or SimulationConfig)."""


# -- numerical evaluation -----------------------------------------------------

class NumericalError(LrOrderError):
    """A numerical routine could not produce a trustworthy result."""


class OverflowGuard(NumericalError):
    """A log-linear parameter left the safe range (|theta| > THETA_CAP)."""


class InfiniteDivergence(NumericalError):
    """The 0*phi(p/0) limit convention yields +inf: incompatible supports."""


class DegenerateError(NumericalError):
    """A probability component required to be positive is zero."""


class NotPositiveDefinite(NumericalError):
    """A matrix expected to be symmetric positive definite is not."""


class DimensionTooLarge(NumericalError):
    """Subset enumeration requested beyond the 2^k tractability cap."""


class NonIdentifiable(NumericalError):
    """All chi-bar mass sits on the point mass at zero; no quantile exists."""


class NonConvergence(NumericalError):
    """Optimizer hit its iteration cap.

    The best iterate found is attached as ``fit`` (flagged not converged)
    so callers can inspect how far the solve got.
    """

    def __init__(self, message: str, fit=None):
        super().__init__(message)
        self.fit = fit
