"""Exception types shared across the package."""


class OrlspiError(Exception):
    """Base class for all package errors."""


class SingularMatrixError(OrlspiError):
    """Linear system is singular to tolerance.

    Carries the condition estimate that tripped the cap (may be inf).
    """

    def __init__(self, message, condition_estimate=float("inf")):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class EigenvalueError(OrlspiError):
    """Eigenvalue computation failed to converge."""


class StabilizationError(OrlspiError):
    """A gain that must be stabilizing is not; carries the spectral radius."""

    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class NonStabilizableError(OrlspiError):
    """Riccati value iteration did not converge within the iteration budget."""

    def __init__(self, message, iterations=None, last_step=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_step = last_step


class CertaintyEquivalenceError(StabilizationError):
    """The current gain does not stabilize the current model estimate."""


class EstimationFailureError(OrlspiError):
    """Every perturbation sample hit a singular one-step map."""


class DivergenceError(OrlspiError):
    """The closed-loop state exceeded the blow-up cap; run aborted."""

    def __init__(self, message, step=None, state_norm=None, trace=None):
        super().__init__(message)
        self.step = step
        self.state_norm = state_norm
        self.trace = trace


class ConfigError(OrlspiError):
    """Experiment configuration is invalid; message carries field diagnostics."""
