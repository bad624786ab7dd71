"""Exception types raised across the package."""


class KornCurlError(Exception):
    """Base class for all package errors."""


class NotSkew(KornCurlError, ValueError):
    pass


class UnknownRegion(KornCurlError, KeyError):
    pass


class EmptyRegion(KornCurlError, ValueError):
    pass


class MeshMismatch(KornCurlError, ValueError):
    pass


class WrongSpace(KornCurlError, TypeError):
    pass


class OutOfRange(KornCurlError, IndexError):
    pass


class InvalidP(KornCurlError, ValueError):
    pass


class ShapeMismatch(KornCurlError, ValueError):
    pass


class NotPositiveDefinite(KornCurlError, ArithmeticError):
    pass


class DegenerateDenominator(KornCurlError, ArithmeticError):
    pass


class NoConvergence(KornCurlError, RuntimeError):
    """Iterative method stopped at its iteration cap.

    ``report`` carries whatever partial information the solver had
    (best iterate, residual, iteration count).
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
