"""Exception hierarchy shared by all modules."""


class AsymHerdError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(AsymHerdError, ValueError):
    pass


class InvalidStateError(AsymHerdError, ValueError):
    pass


class DegenerateSeriesError(AsymHerdError, ValueError):
    """A series has zero variance (or is otherwise unusable for normalization)."""


class InsufficientDataError(AsymHerdError, ValueError):
    pass


class DataError(AsymHerdError, ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += f"{path}"
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class FitError(AsymHerdError, RuntimeError):
    """Nonlinear fit did not converge; ``last_iterate`` holds the final parameters."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate
