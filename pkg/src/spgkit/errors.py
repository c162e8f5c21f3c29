"""Exception hierarchy shared by every module."""

from __future__ import annotations


class SPGError(Exception):
    """Base class for all errors raised by spgkit."""


class InvalidUniverseError(SPGError, ValueError):
    pass


class DomainError(SPGError, ValueError):
    pass


class InvalidFamilyError(SPGError, ValueError):
    pass


class ConnectivityError(SPGError):
    pass


class InvalidIncidenceError(SPGError, ValueError):
    pass


class InvalidEditError(SPGError, ValueError):
    pass


class DiameterUndefinedError(SPGError):
    pass


class BudgetExceededError(SPGError):
    """An exhaustive computation would exceed its configured budget."""


class ConstructionFailure(SPGError):
    """A construction stage could not produce its output."""


class TooFewLayersError(ConstructionFailure):
    def __init__(self, message: str, section: int | None = None):
        super().__init__(message)
        self.section = section


class SeparationInfeasibleError(ConstructionFailure):
    """Rejection sampling ran out of retries; ``constraint`` names the first violation."""

    def __init__(self, message: str, constraint: dict | None = None):
        super().__init__(message)
        self.constraint = constraint or {}


class DegenerateLayerError(ConstructionFailure):
    pass
