"""Exception types shared across the laboratory."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """A run configuration is internally inconsistent or unresolvable."""


class DivergentIntegralError(ArithmeticError):
    """A spectral integral fails its analytic finiteness test."""


class ResolutionError(ValueError):
    """A discretization guard (time step, window, lag) is violated."""


class DegenerateSampleError(ValueError):
    """A sample set has zero spread and cannot support density estimation."""


class BlowUpError(ArithmeticError):
    """The integrator produced non-finite values."""

    def __init__(self, step_index, message=None):
        self.step_index = step_index
        super().__init__(message or f"solution blow-up at step {step_index}")
