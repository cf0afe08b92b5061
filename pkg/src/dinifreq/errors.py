"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point, radius or parameter lies outside the region where an operation is defined."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, underflow, root-finding breakdown)."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class HypothesisViolation(DomainError):
    """A geometric hypothesis required by an inequality does not hold on the window."""
