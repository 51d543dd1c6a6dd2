"""Exception types shared across the package, mapped to CLI exit codes."""


class ImliError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(ImliError):
    """Invalid flags, options, or option combinations."""

    exit_code = 1


class DataError(ImliError):
    """Malformed or unusable input data."""

    exit_code = 2


class SolverError(ImliError):
    """A solver backend failed or produced unusable output."""

    exit_code = 3


class TimeoutNoResult(ImliError):
    """A time limit expired before any usable result was produced."""

    exit_code = 4


class BudgetExceeded(SolverError):
    """The brute-force enumeration budget is too small for the instance."""
