"""Policy iteration viewed as a one-step map on value kernels.

The update P -> P_next is expressed through five derived maps and one
vectorized linear solve, which makes the iteration a discrete-time dynamical
system whose local contraction around the optimum can be probed empirically.
"""

from dataclasses import dataclass

import numpy as np

from . import matops, rng
from .errors import EstimationFailureError, SingularMatrixError


@dataclass
class PiStepCache:
    """Derived maps at a kernel P.

    alpha  = B' P A
    beta   = R + B' P B              (symmetric PD)
    omega  = A' - alpha' beta^{-1} B' (transposed improved closed loop)
    gamma  = Q + alpha' beta^{-1} R beta^{-1} alpha (symmetric PSD)
    one_step_operator = I (x) I - omega (x) omega
    """

    alpha: np.ndarray
    beta: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    one_step_operator: np.ndarray


def build_cache(plant, weights, kernel):
    """Evaluate the five maps at ``kernel``."""
    a, b = plant.a, plant.b
    p = kernel.p
    alpha = b.T @ p @ a
    beta = matops.symmetrize(weights.r + b.T @ p @ b)
    if matops.min_eigenvalue(beta) <= 0.0:
        raise ValueError("build_cache: beta must be positive definite (is P PSD and R PD?)")
    beta_inv_alpha = np.linalg.solve(beta, alpha)
    omega = a.T - beta_inv_alpha.T @ b.T
    gamma = matops.symmetrize(weights.q + beta_inv_alpha.T @ weights.r @ beta_inv_alpha)
    n = a.shape[0]
    one_step = np.eye(n * n) - np.kron(omega, omega)
    return PiStepCache(alpha=alpha, beta=beta, omega=omega, gamma=gamma, one_step_operator=one_step)


def _pi_step_matrix(plant, weights, kernel):
    """The raw one-step solve; returns the symmetrized next kernel matrix."""
    cache = build_cache(plant, weights, kernel)
    n = plant.n_x
    x, _ = matops.solve_linear(cache.one_step_operator, matops.vec(cache.gamma))
    return matops.symmetrize(matops.unvec(x, n, n))


def pi_step_vectorized(plant, weights, kernel):
    """One policy-iteration step as a vectorized solve.

    Solves one_step_operator @ vec(P_next) = vec(gamma) and reshapes; equal to
    evaluating the improved gain. Raises SingularMatrixError (with the
    condition estimate) when the operator is singular to the cap.
    """
    from .lqr import ValueKernel  # local import avoids a cycle

    return ValueKernel(_pi_step_matrix(plant, weights, kernel))


def _symmetric_perturbation(seed, index, n, radius):
    """Symmetric matrix with uniform entries scaled to Frobenius norm ``radius``."""
    g = rng.stream(seed, rng.PERTURBATION_STREAM, index)
    m = g.uniform(-1.0, 1.0, (n, n))
    m = 0.5 * (m + m.T)
    nrm = np.linalg.norm(m)
    while nrm < 1e-300:  # resample the (measure-zero) degenerate draw
        m = g.uniform(-1.0, 1.0, (n, n))
        m = 0.5 * (m + m.T)
        nrm = np.linalg.norm(m)
    return m * (radius / nrm)


def contraction_estimate(plant, weights, p_star, radius, samples, seed):
    """Empirical local contraction factor of the one-step map around P*.

    Applies the step to P* + dP for ``samples`` random symmetric perturbations
    of Frobenius norm ``radius`` and returns the max ratio
    |P_next - P*| / |dP| over the samples where the operator is invertible.
    Large radii may leave the PSD cone; the probe only needs the step's
    linear solve to be well posed, and skips samples where it is not.
    Deterministic given ``seed``; raises EstimationFailureError if every
    sample was skipped.
    """
    if radius <= 0.0:
        raise ValueError("contraction_estimate: radius must be positive")
    from .lqr import ValueKernel

    n = plant.n_x
    worst = None
    for i in range(samples):
        dp = _symmetric_perturbation(seed, i, n, radius)
        perturbed = ValueKernel(p_star.p + dp, psd_tol=np.inf)
        try:
            nxt = _pi_step_matrix(plant, weights, perturbed)
        except (SingularMatrixError, ValueError):
            continue  # singular operator or indefinite beta at this sample
        ratio = matops.fro(nxt - p_star.p) / matops.fro(dp)
        worst = ratio if worst is None else max(worst, ratio)
    if worst is None:
        raise EstimationFailureError(
            f"contraction_estimate: all {samples} samples hit a singular one-step operator"
        )
    return float(worst)
