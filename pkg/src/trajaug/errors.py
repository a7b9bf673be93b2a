"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage errors exit 1, data
errors exit 2, numerical failures exit 3.
"""


class TrajAugError(Exception):
    """Base class for all package-specific errors."""


class DataError(TrajAugError):
    """Invalid input data: malformed files, contract violations, bad shapes."""


class FormatError(DataError):
    """Binary or text container violations (bad magic, version mismatch, truncation)."""


class NumericalError(TrajAugError):
    """Numerical failure: non-finite loss, covariance collapse, Cholesky failure."""


class UsageError(TrajAugError):
    """Command-line or configuration misuse."""
