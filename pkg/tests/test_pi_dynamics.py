import numpy as np
import pytest

from orlspi import lqr, matops, pi_dynamics
from orlspi.errors import EstimationFailureError

from conftest import random_stabilizable_plant, random_stabilizing_gain


def scalar_setup():
    plant = lqr.Plant([[0.5]], [[1.0]])
    weights = lqr.CostWeights([[1.0]], [[1.0]])
    return plant, weights


class TestBuildCache:
    def test_zero_state_matrix_collapses(self):
        plant = lqr.Plant(np.zeros((2, 2)), np.eye(2))
        weights = lqr.CostWeights(np.diag([1.0, 2.0]), np.eye(2))
        cache = pi_dynamics.build_cache(plant, weights, lqr.ValueKernel(np.eye(2)))
        np.testing.assert_allclose(cache.alpha, np.zeros((2, 2)), atol=1e-15)
        np.testing.assert_allclose(cache.omega, np.zeros((2, 2)), atol=1e-15)
        np.testing.assert_allclose(cache.one_step_operator, np.eye(4), atol=1e-15)
        np.testing.assert_allclose(cache.gamma, weights.q, atol=1e-15)

    def test_scalar_chain(self):
        plant, weights = scalar_setup()
        cache = pi_dynamics.build_cache(plant, weights, lqr.ValueKernel([[1.0625 / 0.9375]]))
        assert cache.alpha[0, 0] == pytest.approx(0.56666667, abs=1e-7)
        assert cache.beta[0, 0] == pytest.approx(2.13333333, abs=1e-7)
        assert cache.omega[0, 0] == pytest.approx(0.234375, abs=1e-9)
        assert cache.gamma[0, 0] == pytest.approx(1.0705566, abs=1e-6)
        assert cache.one_step_operator[0, 0] == pytest.approx(0.9450684, abs=1e-6)

    def test_zero_kernel(self):
        plant, weights = scalar_setup()
        cache = pi_dynamics.build_cache(plant, weights, lqr.ValueKernel([[0.0]]))
        assert cache.alpha[0, 0] == 0.0
        assert cache.beta[0, 0] == pytest.approx(1.0)
        assert cache.omega[0, 0] == pytest.approx(0.5)
        assert cache.gamma[0, 0] == pytest.approx(1.0)


class TestPiStepVectorized:
    def test_zero_state_matrix_returns_q(self):
        plant = lqr.Plant(np.zeros((2, 2)), np.eye(2))
        weights = lqr.CostWeights(np.diag([1.0, 2.0]), np.eye(2))
        out = pi_dynamics.pi_step_vectorized(plant, weights, lqr.ValueKernel(3.0 * np.eye(2)))
        np.testing.assert_allclose(out.p, weights.q, atol=1e-14)

    def test_scalar_next_value(self):
        plant, weights = scalar_setup()
        out = pi_dynamics.pi_step_vectorized(plant, weights, lqr.ValueKernel([[1.0625 / 0.9375]]))
        assert out.p[0, 0] == pytest.approx(1.0705566 / 0.9450684, abs=1e-6)

    def test_matches_eval_improve_composition(self, rng):
        for _ in range(100):
            plant, weights = random_stabilizable_plant(rng)
            gain = random_stabilizing_gain(rng, plant, weights, spread=0.15)
            kernel = lqr.policy_evaluation(plant, weights, gain)
            via_map = pi_dynamics.pi_step_vectorized(plant, weights, kernel)
            improved = lqr.policy_improvement(plant, weights, kernel)
            via_composition = lqr.policy_evaluation(plant, weights, improved)
            assert matops.fro(via_map.p - via_composition.p) <= 1e-9

    def test_fixed_point_at_optimum(self, rng):
        for _ in range(20):
            plant, weights = random_stabilizable_plant(rng)
            p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
            out = pi_dynamics.pi_step_vectorized(plant, weights, p_star)
            assert matops.fro(out.p - p_star.p) <= 1e-8


class TestContractionEstimate:
    def test_scalar_local_contraction(self):
        plant, weights = scalar_setup()
        p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
        ratio = pi_dynamics.contraction_estimate(plant, weights, p_star, 1e-8, 50, seed=3)
        assert 0.0 <= ratio < 1.0

    def test_tridiagonal_plant_basin_probe(self):
        # the contraction basin of this plant is narrow (|P*| is only ~0.08):
        # ratios stay below one well inside it and blow past one outside,
        # which the probe must report honestly rather than clip
        a = np.array([[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]])
        plant = lqr.Plant(a, np.eye(3))
        weights = lqr.CostWeights(0.001 * np.eye(3), np.eye(3))
        p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
        inside = pi_dynamics.contraction_estimate(plant, weights, p_star, 0.01, 200, seed=7)
        assert inside < 1.0
        outside = pi_dynamics.contraction_estimate(plant, weights, p_star, 0.1, 200, seed=7)
        assert outside > 1.0

    def test_deterministic_given_seed(self):
        plant, weights = scalar_setup()
        p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
        r1 = pi_dynamics.contraction_estimate(plant, weights, p_star, 1e-6, 40, seed=11)
        r2 = pi_dynamics.contraction_estimate(plant, weights, p_star, 1e-6, 40, seed=11)
        assert r1 == r2

    def test_rejects_nonpositive_radius(self):
        plant, weights = scalar_setup()
        p_star, _ = lqr.optimal_solution(plant, weights)
        with pytest.raises(ValueError):
            pi_dynamics.contraction_estimate(plant, weights, p_star, 0.0, 10, seed=0)

    def test_all_singular_reports_failure(self):
        # A = I, B = 0-ish is not usable; instead force singularity with a
        # deadbeat-free plant where omega has eigenvalue pair product 1:
        # omega = 1 exactly when P has no effect (B = 0 column is invalid),
        # so emulate by patching the operator through a radius far beyond the
        # PSD region where beta stays PD but the solve is singular is not
        # reachable for scalar stable plants; assert the error type directly.
        plant = lqr.Plant([[1.0]], [[1e-6]])
        weights = lqr.CostWeights([[0.0]], [[1.0]])
        # optimal kernel of an (A=1, tiny B) plant is huge; with q = 0 the
        # optimum is P* = 0 and omega = 1, making the one-step map singular
        p_star = lqr.ValueKernel([[0.0]])
        with pytest.raises(EstimationFailureError):
            pi_dynamics.contraction_estimate(plant, weights, p_star, 1e-12, 5, seed=0)
