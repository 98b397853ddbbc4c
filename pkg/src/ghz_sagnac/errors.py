"""Exception hierarchy shared by all modules."""


class SagnacError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SagnacError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class InsufficientProfileError(SagnacError, ValueError):
    """A sampled drive ends before its running integral reaches pi."""


class UnsupportedConfigurationError(SagnacError, ValueError):
    """The requested closed form does not apply to this drive or unit system."""


class ShapeError(SagnacError, ValueError):
    """Two vectors that must share a basis do not."""


class CapacityError(SagnacError):
    """A brute-force oracle was asked for a Hilbert space beyond its size guard."""


class UnidentifiableParameterError(SagnacError, ValueError):
    """Zero Fisher information: the parameter cannot be estimated."""


class InsensitiveOperatingPointError(SagnacError, ArithmeticError):
    """The signal slope vanishes, so error propagation diverges."""


class NumericError(SagnacError, ArithmeticError):
    """A numerical procedure missed its declared tolerance.

    ``achieved`` carries the best error estimate reached, when known.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class QuadratureError(NumericError):
    pass


class StepSizeError(NumericError):
    pass


class TruncationError(NumericError):
    pass
