"""Typed failure modes shared by every module in the package."""


class SimulationError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameter(SimulationError):
    """An argument lies outside its documented domain."""


class DegenerateChannel(SimulationError):
    """A channel carries zero energy where positive energy is required."""


class ConvergenceFailure(SimulationError):
    """A fixed-point iteration stalled; carries the final residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InfeasibleLoad(SimulationError):
    """The load alpha violates the feasibility bound of the chosen receiver."""


class FeasibilityViolation(SimulationError):
    """An allocated power exceeds the configured maximum."""


class NoEquilibrium(SimulationError):
    """The target-SINR equation has no isolated positive root."""


class NoSolutionInBracket(SimulationError):
    """A bracketed root-find found no sign change."""


class InvalidSignal(SimulationError):
    """A permutation index is outside [0, K!)."""


class IntegrationFailure(SimulationError):
    """Adaptive quadrature failed to reach its error target."""


class UsageError(SimulationError):
    """Bad CLI arguments or experiment configuration."""
