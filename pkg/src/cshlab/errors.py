"""Exception hierarchy for cshlab."""


class CshLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CshLabError, ValueError):
    """Bad configuration, bad argument, or mismatched grids."""


class GridMismatchError(ConfigError):
    pass


class DomainError(CshLabError, ValueError):
    """A scalar function was evaluated outside its domain (e.g. negative density)."""


class BlowUpError(CshLabError, FloatingPointError):
    """A trajectory produced non-finite samples."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.6g})")
        self.t = t


class RegimeError(CshLabError):
    """The Euler state left the smooth, vacuum-free regime."""


class ConvergenceError(CshLabError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnsupportedDataError(CshLabError, ValueError):
    pass


class FitError(CshLabError, ValueError):
    pass


class BaselineError(CshLabError):
    pass
