"""Exception hierarchy shared by every module."""


class CantorExtremesError(Exception):
    """Base class for all errors raised by this package."""


# map construction
class MapSpecError(CantorExtremesError, ValueError):
    pass


class OverlapOrGap(MapSpecError):
    pass


class BranchTooWide(MapSpecError):
    pass


class AdjacencyViolation(MapSpecError):
    pass


class OutOfDomain(CantorExtremesError, ValueError):
    pass


# exact set geometry
class ComponentCapExceeded(CantorExtremesError):
    pass


class DepthTooLarge(ComponentCapExceeded):
    pass


# symbolic thresholds
class DepthExhausted(CantorExtremesError):
    """A lexicographic decision could not be made at the available depth."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class IndeterminateOnPrefix(CantorExtremesError):
    pass


# parameters and statistics
class AlphaOne(CantorExtremesError, ValueError):
    pass


class InsufficientSample(CantorExtremesError):
    pass


class QuadratureDisagreement(CantorExtremesError):
    pass


class ConfigError(CantorExtremesError, ValueError):
    pass
