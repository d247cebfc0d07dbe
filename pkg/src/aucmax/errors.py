"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError (and subclasses) -> 3, NumericalError -> 4.
"""


class AucmaxError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(AucmaxError):
    """Invalid option values or option combinations."""


class DataError(AucmaxError):
    """Input data violates a precondition (wrong shape, missing class, ...)."""


class ParseError(DataError):
    """Malformed input text. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(AucmaxError):
    """A numerical procedure failed to produce a usable result."""
