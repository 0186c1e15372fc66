"""Exception hierarchy shared by all smallinc modules."""


class SmallIncError(Exception):
    """Base class for errors raised by smallinc."""


class KernelSingularityError(SmallIncError, ValueError):
    """Raised when a kernel is evaluated at (or too close to) coincident points."""


class DomainError(SmallIncError, ValueError):
    """Raised when an evaluation point or input lies outside the valid region."""


class ConfigError(SmallIncError, ValueError):
    """Raised for malformed or invalid configuration input."""


class SolverError(SmallIncError, RuntimeError):
    """Raised when an iterative solve fails to reach its tolerance.

    Attributes
    ----------
    residual_history : list of float
        Relative residual norms recorded during the solve.
    """

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)
