"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(ValueError):
    """A construction parameter violates a hypothesis (e.g. ``n <= C``)."""


class ConfigError(ValueError):
    """Invalid experiment or grid configuration."""

    def __init__(self, message, pointer=""):
        self.pointer = pointer
        if pointer:
            message = f"{pointer}: {message}"
        super().__init__(message)


class NumericalBlowupError(ArithmeticError):
    """A non-finite value appeared during a computation."""


class EvaluationError(ArithmeticError):
    """A user-supplied functional returned a non-finite value."""
