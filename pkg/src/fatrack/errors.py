"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inputs have inconsistent shapes or out-of-range parameters."""


class NumericalError(ArithmeticError):
    """A matrix that must be invertible (or decomposable) is not."""


class EstimationError(RuntimeError):
    """Not enough information to produce the requested estimate."""
