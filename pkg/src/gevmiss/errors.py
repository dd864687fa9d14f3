"""Exception types shared across the package.

Plain ``ValueError`` is used for domain errors (bad arguments to a single
call).  The classes below mark conditions the CLI maps to distinct exit
codes: configuration problems, malformed input data, and numerical
failures of the estimators.
"""


class ConfigError(ValueError):
    """A configuration is inconsistent or incomplete (CLI exit code 2)."""


class DataError(ValueError):
    """An input data file violates the expected layout (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed or produced a degenerate result (CLI exit code 4)."""
