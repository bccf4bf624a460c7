"""Exception and warning types raised across the package.

Two families matter to callers: :class:`DataError` (bad or insufficient
input data) and :class:`NumericalError` (an evaluation could not reach its
contract).  The command-line front end maps them to exit codes 2 and 3.
"""


class HeavyTailError(Exception):
    """Base class for every error raised by :mod:`heavytail`."""


class DomainError(HeavyTailError, ValueError):
    """Argument outside the domain where an operation is defined."""


class DataError(HeavyTailError, ValueError):
    """Loss data unusable for calibration."""


class EmptyData(DataError):
    pass


class InsufficientTailData(DataError):
    pass


class DegenerateData(DataError):
    pass


class NumericalError(HeavyTailError, ArithmeticError):
    """A numerical procedure failed to meet its accuracy contract."""


# special functions
class PoleArgument(DomainError):
    pass


class ParameterPole(DomainError):
    pass


class OverflowGuard(NumericalError):
    pass


# severity / kernels
class DensityUnavailable(DomainError):
    pass


class IntegerAlphaUnsupported(DomainError):
    pass


class KappaOutOfRange(DomainError):
    pass


class SaddleTooClose(DomainError):
    pass


class SeparationViolated(DomainError):
    pass


class AlphaNearSingular(DomainError):
    pass


class BodyNotSamplable(DomainError):
    pass


class EmptyPortfolio(DomainError):
    pass


# quadrature / root finding
class NonConvergence(NumericalError):
    pass


class GrowthDetected(NumericalError):
    pass


class BracketFailure(NumericalError):
    pass


class NonMonotoneTail(NumericalError):
    def __init__(self, message, samples=()):
        super().__init__(message)
        self.samples = tuple(samples)


class IntegerAlphaWarning(UserWarning):
    """Integer tail exponent was nudged off the Gamma-function pole."""
