"""Exception hierarchy shared across the toolkit.

The CLI maps these onto its exit codes: UsageError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class RecauditError(Exception):
    """Base class for all toolkit errors."""


class UsageError(RecauditError):
    """Bad arguments, malformed config, or an invalid parameter value."""


class DataError(RecauditError):
    """Malformed, inconsistent, or empty input data."""


class NumericalError(RecauditError):
    """A numerical procedure failed (e.g. SGD diverged)."""
