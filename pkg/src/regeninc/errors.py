"""Exception hierarchy shared by every module."""


class RegenError(Exception):
    """Base class for library errors."""


class ValidationError(RegenError, ValueError):
    """Invalid parameters or inputs detected at construction / call time."""


class DomainError(RegenError, ValueError):
    """Argument outside the domain of the operation (e.g. t beyond a horizon)."""


class PreconditionError(RegenError, ValueError):
    """A declared hypothesis required by an operation is missing."""


class HypothesisViolation(RegenError, ValueError):
    """The model violates a hypothesis of the limit theorem being checked."""


class BudgetExceeded(RegenError, RuntimeError):
    """Simulation would exceed the configured cycle-count cap."""
