"""Exception hierarchy shared by all modules."""


class WaveCompositeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(WaveCompositeError, ValueError):
    """An argument lies outside the physical domain (v <= 0, theta <= 0, ...)."""


class UsageError(WaveCompositeError, ValueError):
    """Invalid option or index passed by the caller."""


class PatternError(WaveCompositeError):
    """End states do not produce an R1-CD-R3 wave pattern."""


class NumericError(WaveCompositeError, ArithmeticError):
    """An iterative method failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvariantError(WaveCompositeError):
    """A computed object violates one of its structural invariants."""


class AmplitudeError(WaveCompositeError, ValueError):
    """Perturbation too large: admissibility threshold exceeded or positivity lost."""


class BlowUpError(WaveCompositeError, ArithmeticError):
    """Time stepping produced non-finite values or lost positivity."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


class DomainTooSmallError(WaveCompositeError):
    """Wave fans reached the truncated-domain boundary."""


class ResolutionError(WaveCompositeError):
    """Richardson-type check shows the grid is too coarse."""


class DataError(WaveCompositeError, ValueError):
    """Input data is unusable (NaN, non-positive values for a log fit, too short)."""
