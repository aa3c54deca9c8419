"""
Exception hierarchy for the quadratic Fourier toolkit.
"""
from typing import List, Optional


class QuadFourierError(Exception):
    """Base class for all errors raised by the toolkit."""


class ConfigMismatchError(QuadFourierError, ValueError):
    """Operands live on different groups or have incompatible dimensions."""


class BudgetExceededError(QuadFourierError):
    """A direct evaluation would exceed the configured evaluation budget."""

    def __init__(self, operation: str, estimate: int, budget: int):
        self.operation = operation
        self.estimate = estimate
        self.budget = budget
        super().__init__(
            f"{operation}: estimated {estimate:,} inner evaluations exceeds budget {budget:,} "
            f"(raise --budget or QF_BUDGET to force)"
        )


class DimensionTooLargeError(QuadFourierError, ValueError):
    """The requested dimension is beyond what an exhaustive routine supports."""

    def __init__(self, operation: str, value: int, bound: int, what: str = "n"):
        self.operation = operation
        self.value = value
        self.bound = bound
        super().__init__(f"{operation}: {what} = {value} exceeds the supported bound {what} <= {bound}")


class UnboundedInputError(QuadFourierError, ValueError):
    """A 1-bounded function was required."""


class IdentityViolation(QuadFourierError, AssertionError):
    """A checked identity or inequality failed numerically."""


class InverseTheoremViolation(IdentityViolation):
    """Large U^3 norm but no quadratic phase above the acceptance floor."""

    def __init__(self, u3_norm: float, delta: float, floor: float, best: Optional[float]):
        self.u3_norm = u3_norm
        self.delta = delta
        self.floor = floor
        self.best = best
        super().__init__(
            f"inverse theorem violated at desk scale: ||g||_U3 = {u3_norm:.6g} >= delta = {delta:.6g} "
            f"but best quadratic correlation {best} < floor {floor:.6g}"
        )


class IterationCapExceeded(QuadFourierError):
    """A decomposition driver ran past its iteration cap."""

    def __init__(self, driver: str, cap: int, energy_history: List[float]):
        self.driver = driver
        self.cap = cap
        self.energy_history = list(energy_history)
        super().__init__(
            f"{driver}: iteration cap {cap} exceeded; energy history {self.energy_history}"
        )


class MalformedInputError(QuadFourierError, ValueError):
    """An input file does not match the expected JSON layout."""
