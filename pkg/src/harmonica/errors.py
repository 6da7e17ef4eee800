"""Exception hierarchy shared by all harmonica modules."""


class HarmonicaError(Exception):
    """Base class for every error raised by the package."""


class PointOutsideDomain(HarmonicaError, ValueError):
    pass


class BranchMismatch(HarmonicaError, ValueError):
    pass


class EmptySampler(HarmonicaError, ValueError):
    pass


class OpenPath(HarmonicaError, ValueError):
    pass


class PathEndpointMismatch(HarmonicaError, ValueError):
    pass


class InvalidParameters(HarmonicaError, ValueError):
    pass


class DegeneratePoint(HarmonicaError, ArithmeticError):
    """The immersion condition fails (or is numerically zero) at a point."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class DerivativeUnavailable(HarmonicaError):
    pass


class NonConvergent(HarmonicaError, ArithmeticError):
    """A quadrature or root-finding budget was exhausted."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


QuadratureNonConvergent = NonConvergent


class TailNotDecaying(NonConvergent):
    """Surface integrand does not decay at an end of the domain."""


class NonIntegerDegree(HarmonicaError, ArithmeticError):
    pass


class RootNotBracketed(HarmonicaError, ValueError):
    pass


class OrderOutOfRange(HarmonicaError, ValueError):
    pass


class NotFTCEnd(HarmonicaError, ValueError):
    pass


class LimitNormalDiverges(HarmonicaError, ArithmeticError):
    pass
