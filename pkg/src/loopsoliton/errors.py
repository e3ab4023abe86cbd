"""Exception hierarchy shared by all modules."""


class LoopSolitonError(Exception):
    """Base class for every error raised by this package."""


class CurveError(LoopSolitonError):
    pass


class DegenerateCurve(CurveError):
    """Two branch points closer than the separation tolerance."""


class BadLeadingCoefficient(CurveError):
    pass


class CurveParseError(CurveError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvalidDivisor(LoopSolitonError):
    pass


class QuadratureFailure(LoopSolitonError):
    pass


class NonPositiveImTau(LoopSolitonError):
    pass


class OnThetaDivisor(LoopSolitonError):
    pass


class BranchPointCollision(LoopSolitonError):
    pass


class PathThroughBranchPoint(LoopSolitonError):
    pass


class SpecialDivisor(LoopSolitonError):
    pass


class StepCollapse(LoopSolitonError):
    pass


class SeriesDiverges(LoopSolitonError):
    pass


class ZeroSpeed(LoopSolitonError):
    pass


class NotUnitSpeed(LoopSolitonError):
    pass


class NotClosed(LoopSolitonError):
    pass


class NoConsistentPhase(LoopSolitonError):
    pass


class NotPrime(LoopSolitonError):
    pass


class DivergentSum(LoopSolitonError):
    pass
