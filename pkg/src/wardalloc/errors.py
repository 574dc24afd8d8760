"""Exception types shared across the solver suite."""


class WardallocError(Exception):
    """Base class for every package-specific error."""


class InvalidInstanceError(WardallocError):
    """A scenario instance, profile, or scenario file violates a structural invariant."""


class InstanceTooLargeError(WardallocError):
    """An exhaustive-enumeration size guard was exceeded."""


class GenerationError(WardallocError):
    """Rejection sampling failed to produce an instance within the iteration cap."""


class BudgetExceededError(WardallocError):
    """An excellence set was evaluated although its upgrade cost does not fit the budget."""


class AssumptionViolationError(WardallocError):
    """An operation requires a cost-structure assumption that the instance violates."""
