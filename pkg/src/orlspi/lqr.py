"""Model-based LQR machinery.

Plant/cost containers, policy evaluation and improvement, a Riccati
value-iteration oracle for the optimal kernel, and the classic policy
iteration loop. Policy evaluation is solved exactly through the n^2 x n^2
vectorized linear system rather than by fixed-point iteration, so test
tolerances do not inherit an iteration tolerance.
"""

from dataclasses import dataclass, field

import numpy as np

from . import matops
from .errors import NonStabilizableError, StabilizationError

STABILITY_MARGIN = 1e-10  # required gap below the unit circle


@dataclass
class Plant:
    """State and input matrices of x' = A x + B u (+ disturbance)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = matops.as_matrix(self.a, "a")
        self.b = matops.as_matrix(self.b, "b")
        if self.a.shape[0] != self.a.shape[1]:
            raise ValueError(f"Plant: a must be square, got {self.a.shape}")
        if self.b.shape[0] != self.a.shape[0]:
            raise ValueError(f"Plant: b has {self.b.shape[0]} rows, a has {self.a.shape[0]}")

    @property
    def n_x(self):
        return self.a.shape[0]

    @property
    def n_u(self):
        return self.b.shape[1]


@dataclass
class CostWeights:
    """Quadratic stage-cost weights; q symmetric PSD, r symmetric PD."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.q = matops.as_matrix(self.q, "q")
        self.r = matops.as_matrix(self.r, "r")
        if not matops.is_psd(self.q, tol=matops.PSD_TOL):
            raise ValueError("CostWeights: q must be symmetric positive semidefinite")
        if matops.symmetry_defect(self.r) > matops.SYMMETRY_TOL:
            raise ValueError("CostWeights: r must be symmetric")
        if matops.min_eigenvalue(self.r) <= 1e-12:
            raise ValueError("CostWeights: r must be positive definite")


@dataclass
class Gain:
    """State-feedback gain; u = k @ x."""

    k: np.ndarray

    def __post_init__(self):
        self.k = matops.as_matrix(self.k, "k")


@dataclass
class ValueKernel:
    """Symmetric PSD kernel of a quadratic value function."""

    p: np.ndarray
    psd_tol: float = field(default=matops.PSD_TOL, repr=False)

    def __post_init__(self):
        self.p = matops.as_matrix(self.p, "p")
        if matops.symmetry_defect(self.p) > 1e-9:
            raise ValueError("ValueKernel: kernel asymmetric beyond 1e-9")
        self.p = matops.symmetrize(self.p)
        if matops.min_eigenvalue(self.p) < -self.psd_tol:
            raise ValueError("ValueKernel: kernel not PSD to tolerance")


def closed_loop(plant, gain):
    """A + B K."""
    return plant.a + plant.b @ gain.k


def is_stabilizing(plant, gain):
    """True iff the closed loop is Schur stable with margin STABILITY_MARGIN."""
    return matops.spectral_radius(closed_loop(plant, gain)) < 1.0 - STABILITY_MARGIN


def solve_discrete_lyapunov(f, s):
    """Solve P = S + F^T P F through the vectorized linear system.

    Returns the symmetrized solution. Raises SingularMatrixError if the
    vectorized operator is singular to the condition cap.
    """
    n = f.shape[0]
    m = np.eye(n * n) - np.kron(f.T, f.T)
    x, _ = matops.solve_linear(m, matops.vec(s))
    return matops.symmetrize(matops.unvec(x, n, n))


def policy_evaluation(plant, weights, gain):
    """Value kernel of a stabilizing gain: P = Q + K'RK + (A+BK)' P (A+BK)."""
    f = closed_loop(plant, gain)
    rho = matops.spectral_radius(f)
    if rho >= 1.0 - STABILITY_MARGIN:
        raise StabilizationError(
            f"policy_evaluation: gain is not stabilizing (spectral radius {rho:.12f})",
            spectral_radius=rho,
        )
    s = plant_stage_cost(weights, gain)
    p = solve_discrete_lyapunov(f, s)
    residual = matops.fro(p - (s + f.T @ p @ f))
    if residual > 1e-10 * (1.0 + matops.fro(s)):
        raise StabilizationError(
            f"policy_evaluation: Bellman residual {residual:.3e} out of contract"
        )
    return ValueKernel(p)


def plant_stage_cost(weights, gain):
    """Q + K^T R K."""
    return weights.q + gain.k.T @ weights.r @ gain.k


def policy_improvement(plant, weights, kernel):
    """Greedy gain for a value kernel: K = -(R + B'PB)^{-1} B'PA."""
    p = kernel.p
    b, a = plant.b, plant.a
    k = -np.linalg.solve(weights.r + b.T @ p @ b, b.T @ p @ a)
    return Gain(k)


def riccati_step(plant, weights, p):
    a, b = plant.a, plant.b
    btpa = b.T @ p @ a
    pn = weights.q + a.T @ p @ a - btpa.T @ np.linalg.solve(weights.r + b.T @ p @ b, btpa)
    return matops.symmetrize(pn)


def dare_value_iteration(plant, weights, tol=1e-10, max_iter=100_000):
    """Optimal value kernel by iterating the Riccati recursion from P0 = Q.

    Serves as the ground-truth oracle; independent of the policy iteration
    path. Non-convergence within ``max_iter`` doubles as the operational
    stabilizability test and raises NonStabilizableError.
    """
    p = matops.symmetrize(weights.q.copy())
    for i in range(max_iter):
        pn = riccati_step(plant, weights, p)
        step = matops.fro(pn - p)
        if step <= tol:
            return ValueKernel(pn)
        p = pn
    raise NonStabilizableError(
        f"dare_value_iteration: no convergence in {max_iter} iterations "
        f"(last step {step:.3e}); plant may not be stabilizable",
        iterations=max_iter,
        last_step=step,
    )


def dare_residual(plant, weights, kernel):
    """Frobenius norm of P - Riccati(P)."""
    return matops.fro(kernel.p - riccati_step(plant, weights, kernel.p))


def optimal_solution(plant, weights, tol=1e-10, max_iter=100_000):
    """(P*, K*) of the plant, via the value-iteration oracle."""
    p_star = dare_value_iteration(plant, weights, tol=tol, max_iter=max_iter)
    return p_star, policy_improvement(plant, weights, p_star)


def model_based_pi(plant, weights, k0, iters):
    """Policy iteration from a stabilizing gain.

    Returns [(P_0, K_1), (P_1, K_2), ...] with P_i the evaluation of K_i and
    K_{i+1} the improved gain.
    """
    out = []
    gain = k0
    for _ in range(iters):
        kernel = policy_evaluation(plant, weights, gain)
        gain = policy_improvement(plant, weights, kernel)
        out.append((kernel, gain))
    return out


def closed_loop_cost(weights, kernel, x0):
    """Quadratic cost of the initial state: x0' P x0."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != weights.q.shape[0]:
        raise ValueError(f"closed_loop_cost: x0 has length {x0.size}, expected {weights.q.shape[0]}")
    return float(x0 @ kernel.p @ x0)
