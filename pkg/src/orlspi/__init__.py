"""Online least-squares identification coupled with LQR policy iteration.

Library layers:

    matops        dense-matrix primitives and their numerical contracts
    lqr           plant/cost types, policy evaluation/improvement, Riccati oracle
    pi_dynamics   policy iteration as a one-step map; contraction probing
    rls           recursive least squares, persistency, ISS error bounds
    noise         adversarial noise schedules and sequence norms
    loop          the coupled identification/control loop (compiled or NumPy core)
    config/runner/cli   experiment harness
"""

from . import backend, config, loop, lqr, matops, noise, pi_dynamics, rls, rng, runner
from .errors import (
    CertaintyEquivalenceError,
    ConfigError,
    DivergenceError,
    EigenvalueError,
    EstimationFailureError,
    NonStabilizableError,
    OrlspiError,
    SingularMatrixError,
    StabilizationError,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "config",
    "loop",
    "lqr",
    "matops",
    "noise",
    "pi_dynamics",
    "rls",
    "rng",
    "runner",
    "OrlspiError",
    "SingularMatrixError",
    "EigenvalueError",
    "StabilizationError",
    "NonStabilizableError",
    "CertaintyEquivalenceError",
    "EstimationFailureError",
    "DivergenceError",
    "ConfigError",
    "__version__",
]
