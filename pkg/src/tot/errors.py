"""Exception types shared across the library."""


class TransportError(Exception):
    """Base class for every error raised by this package."""


class GridSizeError(TransportError, ValueError):
    """Grid dimensions rejected (must be even and at least 8)."""


class PositivityError(TransportError, ValueError):
    """A density is not strictly positive (or not positive enough)."""


class CutLocusError(TransportError, RuntimeError):
    """A circle map's displacement reached half the circumference."""


class ConcavityError(TransportError, RuntimeError):
    """A - D^2(u) lost positive definiteness; the induced map is not a
    diffeomorphism and the residual/linearization is not defined."""


class AdmissibilityError(TransportError, RuntimeError):
    """A decomposed potential left the admissible neighbourhood; the
    message names the inequality that failed."""


class ConstructionError(TransportError, RuntimeError):
    """An internal consistency check failed while assembling an object
    (non-monotone map, coefficient of the triangular solve nonpositive, ...)."""


class ConvergenceError(TransportError, RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, *, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StepCollapseError(ConvergenceError):
    """Continuation step size collapsed; carries the partial trajectory."""

    def __init__(self, message, *, trajectory=None, **kw):
        super().__init__(message, **kw)
        self.trajectory = trajectory


class InitializationError(TransportError, RuntimeError):
    """Could not produce a converged starting state for the continuation."""


class ConfigError(TransportError, ValueError):
    """Configuration file could not be parsed or validated."""

    def __init__(self, message, *, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key
