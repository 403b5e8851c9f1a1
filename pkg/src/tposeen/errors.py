"""Exception types shared across the package.

The CLI maps these onto process exit codes, so solver code should raise
the most specific class that applies.
"""


class TposeenError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(TposeenError):
    """Invalid or inconsistent configuration / parameter window violation."""


class GridMismatchError(TposeenError):
    """Operands live on different grids or have incompatible shapes."""


class DomainApproximationError(TposeenError):
    """The periodic-box surrogate for whole space is not trustworthy."""


class SupportGuardError(DomainApproximationError):
    """Too much field mass outside the safe ball for coordinate-weighted ops."""


class NonConvergenceError(TposeenError):
    """Iterative scheme failed to contract; carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class NumericalBlowupError(TposeenError):
    """NaN/Inf appeared during iteration; carries the trace up to the blow-up."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class SingularSystemError(TposeenError):
    """A linear system was numerically singular."""
