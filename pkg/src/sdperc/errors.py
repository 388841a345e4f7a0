class ContractViolation(ValueError):
    """A precondition of a library call was not met."""


class DegenerateRectangle(ContractViolation):
    pass


class BudgetExceeded(ContractViolation):
    """Exact enumeration refused because the configuration space is too large."""


class InvariantViolation(AssertionError):
    """A structural per-sample fact (duality, inclusion, coupling) failed."""
