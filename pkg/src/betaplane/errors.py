"""Exception types shared across the package."""


class BetaplaneError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(BetaplaneError):
    """A context, cache or operator was built for different parameters."""


class DegenerateSpectrumError(BetaplaneError, ValueError):
    """beta = 2 k^2: the n = 0 dispersion root is double and the oscillating
    eigenvector formula is singular.  The basis refuses such beta rather than
    guessing a replacement vector."""


class TruncationError(BetaplaneError):
    """An exact coefficient-space operation would need indices beyond the
    stored truncation and growth was disabled."""


class ResolutionError(BetaplaneError):
    """A physical-space grid is too coarse for the requested spectral
    truncation (aliasing)."""


class InvalidTriadError(BetaplaneError, ValueError):
    """Triad wavenumbers do not satisfy the convolution constraint."""


class InstabilityError(BetaplaneError, RuntimeError):
    """Time integration blew up (energy grew beyond the accepted factor)."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class UndefinedRatioError(BetaplaneError, ZeroDivisionError):
    """A ratio diagnostic was requested for zero input."""
