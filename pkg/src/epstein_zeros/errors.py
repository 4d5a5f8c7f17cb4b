"""Exception hierarchy shared by every module."""


class EpsteinError(Exception):
    """Base class for all library errors."""


class InvalidInput(EpsteinError, ValueError):
    pass


class NotPositiveDefinite(InvalidInput):
    pass


class NonFundamentalDiscriminant(InvalidInput):
    pass


class UnsupportedGroup(InvalidInput):
    pass


class UnsupportedCombination(InvalidInput):
    pass


class NumericFailure(EpsteinError, ArithmeticError):
    pass


class RepresentationNotFound(NumericFailure):
    pass


class PoleOfGamma(NumericFailure):
    pass


class PoleAtOne(NumericFailure):
    pass


class NoConvergence(NumericFailure):
    pass


class BoundaryZero(NumericFailure):
    """A zero of the function lies (numerically) on the contour."""

    def __init__(self, msg, point=None):
        super().__init__(msg)
        self.point = point


class VacantCoefficient(EpsteinError, LookupError):
    """Requested coefficient is not determined by the available data."""


class MissingManifest(InvalidInput):
    pass
