"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code / HTTP status family so callers can
translate failures without string matching.
"""


class LrSelectError(Exception):
    """Base class for all package errors."""


class DataValidationError(LrSelectError):
    """Bad input data: shapes, signs, names, response/family mismatch."""


class RankDeficiencyError(DataValidationError):
    """Design matrix is rank deficient."""

    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        cols = ", ".join(str(c) for c in self.dependent_columns)
        super().__init__(f"design matrix is rank deficient; dependent columns: {cols}")


class EligibilityError(LrSelectError):
    """A term violates the active selection method's eligibility rule."""


class SessionStoppedError(LrSelectError):
    """Operation requires an active (non-stopped) session."""


class ConvergenceError(LrSelectError):
    """Too many model fits failed to converge for the result to be trusted."""
