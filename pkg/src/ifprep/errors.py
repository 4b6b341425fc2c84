"""Exception hierarchy shared across the simulator."""


class IFPError(Exception):
    """Base class for all simulator errors."""


class AmplitudeOverflow(IFPError, ValueError):
    """Interaction probabilities add up to more than one."""


class DegenerateSelection(IFPError):
    """A D2 click has zero probability, so conditioning on it is undefined."""


class EmptySelection(IFPError):
    """No trial in the ensemble ended with a D2 click."""


class NumericalDomainError(IFPError, ValueError):
    """A grid or window cannot represent the requested wavepacket."""


class GridTooCoarse(NumericalDomainError):
    pass


class ZeroOverlap(NumericalDomainError):
    pass
