"""Exception hierarchy shared by every solver in the package."""


class ImpactNashError(Exception):
    """Base class for all package errors."""


class DomainError(ImpactNashError, ValueError):
    """An input lies outside the region where a formula is defined."""


class NoEquilibrium(ImpactNashError):
    """No constant Nash equilibrium exists for the given parameters."""


class SingularDenominator(NoEquilibrium):
    """The equilibrium denominator vanishes within the numerical guard."""


class BracketError(ImpactNashError):
    """A root-finding bracket does not enclose a sign change."""


class Unbounded(ImpactNashError):
    """A best-response criterion has no finite maximizer."""


class NoConvergence(ImpactNashError):
    """The fixed-point iteration hit its cap without converging.

    The last iterate is kept on ``report`` so callers can inspect it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConsistencyError(ImpactNashError):
    """Two independent computations of the same quantity disagree."""


class ConfigError(ImpactNashError):
    """A run configuration is malformed or inconsistent."""
