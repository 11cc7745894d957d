"""Exception types shared across the package."""


class FracLabError(Exception):
    """Base class for all package errors."""


class NoInteriorNodes(FracLabError):
    """The grid spacing is too coarse: no node falls inside the domain."""


class OutsideUnitBall(FracLabError):
    """Barrier geometry is only defined for points strictly inside the unit ball."""


class InvalidOrder(FracLabError):
    """Fractional order s must lie in the open interval (0, 1)."""


class LengthMismatch(FracLabError):
    """Sample arrays do not match the quadrature sample count."""


class NonpositiveTruncation(FracLabError):
    """Tail truncation radius must be positive."""


class CflViolation(FracLabError):
    """Explicit time step exceeds the monotone (convex-combination) bound."""


class InvalidTolerance(FracLabError):
    """Solver tolerance must be positive."""


class NotConverged(FracLabError):
    """Iteration failed to reach the requested tolerance.

    Carries the best iterate so callers can still inspect it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateStart(FracLabError):
    """Power-iteration start vector is identically zero."""


class InvalidGamma(FracLabError):
    """Barrier exponent must satisfy 0 < gamma < 2s - 1."""


class InsufficientData(FracLabError):
    """Not enough trace samples in the fit window."""


class NonpositiveNorms(FracLabError):
    """Trace hit zero inside the fit window; decay rate is undefined.

    The first time at which the norm vanished is reported instead.
    """

    def __init__(self, message, extinction_time=None):
        super().__init__(message)
        self.extinction_time = extinction_time


class SandwichViolated(FracLabError):
    """No finite constant closes the two-sided eigenfunction bound."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class ConfigError(FracLabError):
    """Run configuration failed validation; message names the field."""
