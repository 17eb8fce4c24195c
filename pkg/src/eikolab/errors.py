"""Error taxonomy shared across the package.

Configuration-style errors (bad arguments, out-of-regime parameters, grids too
coarse) derive from ConfigError; failures of a numerical procedure (blow-up,
lost shooting bracket, non-contracting iteration) derive from NumericalError.
The command line maps these onto exit codes 2 and 3 respectively.
"""


class ConfigError(ValueError):
    """Invalid configuration or argument."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain of an operation."""


class DivergentMassError(DomainError):
    """Closed-form defect mass requested where the integral diverges."""


class ConventionError(ConfigError):
    """Sign convention mix-up between theorem-style and simulation-style inputs."""


class OutOfRegimeError(ConfigError):
    """Parameters outside the regime where target patterns form."""


class ResolutionError(ConfigError):
    """Grid too coarse for the requested operation."""


class StatisticsError(ConfigError):
    """Too few samples for a meaningful statistic."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class BlowUpError(NumericalError):
    """Time stepper produced NaN/Inf."""

    def __init__(self, message: str, step_index: int):
        super().__init__(message)
        self.step_index = step_index


class BracketError(NumericalError):
    """Shooting bisection lost its bracket."""


class NonContractionError(NumericalError):
    """Fixed-point iteration diverged."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class RangeError(NumericalError):
    """Quantity left the range where the evaluation is meaningful."""
