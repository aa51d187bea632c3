"""
Exception hierarchy for the hypersphere toolkit.
"""


class HypersphereError(Exception):
    """Base class for toolkit errors."""


class DimensionError(HypersphereError, ValueError):
    """Operand shapes do not agree."""


class LabelError(HypersphereError, ValueError):
    """A class label is outside [0, n)."""


class FormatError(HypersphereError, ValueError):
    """A binary or text input does not follow its format."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonFiniteError(HypersphereError, ArithmeticError):
    """An operation produced NaN or Inf."""


class DivergenceError(HypersphereError):
    """Training loss became non-finite."""

    def __init__(self, iteration: int, loss: float):
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"training diverged at iteration {iteration} (loss={loss})")


class CheckFailedError(HypersphereError):
    """A numeric acceptance check did not hold."""

    def __init__(self, check_name: str, detail: str = ""):
        self.check_name = check_name
        message = f"check failed: {check_name}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
