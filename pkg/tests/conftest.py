import numpy as np
import pytest

from orlspi import lqr


def random_stabilizable_plant(rng, n_x=None):
    """Random (plant, weights) pair that admits a Riccati solution.

    Continuous random draws are controllable almost surely; the value
    iteration is the operational stabilizability check.
    """
    n = int(n_x if n_x is not None else rng.integers(1, 4))
    m = int(rng.integers(1, n + 1))
    a = rng.uniform(-1.0, 1.0, (n, n))
    scale = rng.uniform(0.3, 1.2)
    radius = max(np.max(np.abs(np.linalg.eigvals(a))), 1e-3)
    a = a * (scale / radius)
    b = rng.uniform(-1.0, 1.0, (n, m))
    while np.linalg.norm(b) < 0.3:
        b = rng.uniform(-1.0, 1.0, (n, m))
    plant = lqr.Plant(a, b)
    weights = lqr.CostWeights(np.eye(n), np.eye(m))
    return plant, weights


def random_stabilizing_gain(rng, plant, weights, spread=0.1):
    """Optimal gain plus a small perturbation, retried until stabilizing."""
    kernel, k_star = lqr.optimal_solution(plant, weights)
    for _ in range(100):
        k = lqr.Gain(k_star.k + spread * rng.uniform(-1.0, 1.0, k_star.k.shape))
        if lqr.is_stabilizing(plant, k):
            return k
    return k_star


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
