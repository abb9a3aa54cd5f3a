"""Exception types shared across the package.

Plain ValueError is used for bad arguments (dimension mismatches, empty
point sets, non-positive regularization). The classes below exist so the
CLI can map failures onto distinct exit codes.
"""


class ConfigError(ValueError):
    """Raised when a run configuration cannot be parsed or validated."""


class NumericalAbort(RuntimeError):
    """Raised when a computation produces non-finite or impossible values."""
