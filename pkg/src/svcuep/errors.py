"""Exception hierarchy shared by every module."""


class SvcUepError(Exception):
    """Base class for all errors raised by svcuep."""


class InvalidArgumentError(SvcUepError, ValueError):
    """A scalar argument is outside its documented domain."""


class DomainError(SvcUepError, ValueError):
    """The channel configuration is outside the massive-MIMO regime."""


class ValidationError(SvcUepError, ValueError):
    """A data object violates one of its invariants.

    ``invariant`` names the violated rule so callers can report it.
    """

    def __init__(self, message, invariant=None):
        super().__init__(message)
        self.invariant = invariant


class TraceParseError(SvcUepError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RankDeficientError(SvcUepError, ValueError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class UndefinedCorrelationError(SvcUepError, ValueError):
    pass


class CalibrationError(SvcUepError):
    """No candidate channel configuration reached the PER target.

    ``closest`` carries the best candidates (config, achieved PER) so the
    caller can print a failure report.
    """

    def __init__(self, message, closest=()):
        super().__init__(message)
        self.closest = list(closest)


class ConfigError(SvcUepError):
    def __init__(self, message, key=None, location=None):
        parts = []
        if key is not None:
            parts.append(f"key '{key}'")
        if location is not None:
            parts.append(str(location))
        prefix = (", ".join(parts) + ": ") if parts else ""
        super().__init__(prefix + message)
        self.key = key
        self.location = location
        self.detail = message
