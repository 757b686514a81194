"""Exception types shared across the package."""

from __future__ import annotations


class FunnelLabError(Exception):
    """Base class for all errors raised by funnel_lab."""


class DomainError(FunnelLabError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class RangeError(FunnelLabError, ValueError):
    """A computed value left the admissible range (e.g. a return radius >= 1)."""


class NonInvertibleError(FunnelLabError):
    """A circle component failed to be injective where injectivity is required."""

    def __init__(self, message: str, interval: tuple[float, float] | None = None):
        super().__init__(message)
        self.interval = interval


class ConvergenceError(FunnelLabError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EscapeError(FunnelLabError):
    """An orbit left the domain during iteration; carries the escape index."""

    def __init__(self, message: str, iterate: int):
        super().__init__(message)
        self.iterate = iterate


class DivergenceError(FunnelLabError):
    """A trajectory blew up; carries the blow-up time."""

    def __init__(self, message: str, t_blow: float):
        super().__init__(message)
        self.t_blow = t_blow


class ContinuationError(FunnelLabError):
    """A branch-following step failed to converge or lost its target."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InsufficientDataError(FunnelLabError):
    """Not enough data to run an analysis (too few crossings, spikes, ...)."""


class ConfigError(FunnelLabError):
    """Bad configuration file or flag combination."""
