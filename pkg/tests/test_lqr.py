import numpy as np
import pytest
from scipy.linalg import solve_discrete_are

from orlspi import lqr, matops
from orlspi.errors import NonStabilizableError, StabilizationError

from conftest import random_stabilizable_plant, random_stabilizing_gain


def scalar_plant(a=0.5, b=1.0, q=1.0, r=1.0):
    return lqr.Plant([[a]], [[b]]), lqr.CostWeights([[q]], [[r]])


def preset_5_1_plant():
    a = np.array([[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]])
    return lqr.Plant(a, np.eye(3)), lqr.CostWeights(0.001 * np.eye(3), np.eye(3))


class TestTypes:
    def test_plant_dimension_check(self):
        with pytest.raises(ValueError):
            lqr.Plant(np.eye(2), np.ones((3, 1)))

    def test_cost_weights_require_pd_r(self):
        with pytest.raises(ValueError, match="positive definite"):
            lqr.CostWeights(np.eye(2), np.zeros((1, 1)))

    def test_cost_weights_require_psd_q(self):
        with pytest.raises(ValueError, match="semidefinite"):
            lqr.CostWeights(np.diag([1.0, -0.5]), np.eye(1))

    def test_value_kernel_symmetry_guard(self):
        with pytest.raises(ValueError, match="asymmetric"):
            lqr.ValueKernel(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestIsStabilizing:
    def test_scalar_stable(self):
        plant, _ = scalar_plant()
        assert lqr.is_stabilizing(plant, lqr.Gain([[0.0]]))

    def test_open_loop_unstable_tridiagonal(self):
        plant, _ = preset_5_1_plant()
        assert not lqr.is_stabilizing(plant, lqr.Gain(np.zeros((3, 3))))

    def test_deadbeat(self):
        plant, _ = scalar_plant()
        assert lqr.is_stabilizing(plant, lqr.Gain([[-0.5]]))


class TestPolicyEvaluation:
    def test_deadbeat_kernel(self):
        plant, weights = scalar_plant()
        kernel = lqr.policy_evaluation(plant, weights, lqr.Gain([[-0.5]]))
        assert kernel.p[0, 0] == pytest.approx(1.25, abs=1e-12)

    def test_scalar_geometric_series(self):
        plant, weights = scalar_plant()
        kernel = lqr.policy_evaluation(plant, weights, lqr.Gain([[-0.25]]))
        assert kernel.p[0, 0] == pytest.approx(1.0625 / 0.9375, abs=1e-12)

    def test_zero_state_matrix(self):
        plant = lqr.Plant([[0.0]], [[1.0]])
        weights = lqr.CostWeights([[1.0]], [[1.0]])
        kernel = lqr.policy_evaluation(plant, weights, lqr.Gain([[0.0]]))
        assert kernel.p[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_not_stabilizing_raises_with_radius(self):
        plant, weights = scalar_plant(a=1.5)
        with pytest.raises(StabilizationError) as info:
            lqr.policy_evaluation(plant, weights, lqr.Gain([[0.0]]))
        assert info.value.spectral_radius == pytest.approx(1.5, abs=1e-8)

    def test_bellman_residual_contract(self, rng):
        for _ in range(50):
            plant, weights = random_stabilizable_plant(rng)
            gain = random_stabilizing_gain(rng, plant, weights)
            kernel = lqr.policy_evaluation(plant, weights, gain)
            f = lqr.closed_loop(plant, gain)
            s = lqr.plant_stage_cost(weights, gain)
            residual = matops.fro(kernel.p - (s + f.T @ kernel.p @ f))
            assert residual <= 1e-10


class TestPolicyImprovement:
    def test_zero_kernel(self):
        plant, weights = scalar_plant()
        gain = lqr.policy_improvement(plant, weights, lqr.ValueKernel([[0.0]]))
        assert gain.k[0, 0] == 0.0

    def test_scalar_value(self):
        plant, weights = scalar_plant()
        gain = lqr.policy_improvement(plant, weights, lqr.ValueKernel([[1.0625 / 0.9375]]))
        assert gain.k[0, 0] == pytest.approx(-0.265625, abs=1e-9)

    def test_zero_state_matrix(self):
        plant = lqr.Plant([[0.0]], [[1.0]])
        weights = lqr.CostWeights([[1.0]], [[1.0]])
        gain = lqr.policy_improvement(plant, weights, lqr.ValueKernel([[7.0]]))
        assert gain.k[0, 0] == 0.0


class TestDareValueIteration:
    def test_zero_state_matrix_returns_q(self):
        plant = lqr.Plant(np.zeros((2, 2)), np.eye(2))
        weights = lqr.CostWeights(np.diag([1.0, 2.0]), np.eye(2))
        kernel = lqr.dare_value_iteration(plant, weights, tol=1e-12)
        np.testing.assert_allclose(kernel.p, weights.q, atol=1e-12)

    def test_scalar_quadratic_formula_oracle(self):
        # b^2 p^2 + (r - q b^2 - a^2 r) p - q r = 0 with a=0.5, b=q=r=1
        p_star = (0.25 + np.sqrt(4.0625)) / 2.0
        plant, weights = scalar_plant()
        kernel = lqr.dare_value_iteration(plant, weights, tol=1e-12)
        assert kernel.p[0, 0] == pytest.approx(p_star, abs=1e-10)
        gain = lqr.policy_improvement(plant, weights, kernel)
        assert gain.k[0, 0] == pytest.approx(-0.5 * p_star / (1.0 + p_star), abs=1e-10)

    def test_tridiagonal_plant_residual(self):
        plant, weights = preset_5_1_plant()
        kernel = lqr.dare_value_iteration(plant, weights, tol=1e-10)
        assert lqr.dare_residual(plant, weights, kernel) <= 1e-9
        # independent cross-check against the Schur-based solver
        ref = solve_discrete_are(plant.a, plant.b, weights.q, weights.r)
        assert matops.fro(kernel.p - ref) <= 1e-8

    def test_non_stabilizable_raises(self):
        plant = lqr.Plant([[2.0]], [[0.0]])
        weights = lqr.CostWeights([[1.0]], [[1.0]])
        with pytest.raises(NonStabilizableError):
            lqr.dare_value_iteration(plant, weights, max_iter=500)

    def test_fixed_point_reproduces_optimal_pair(self, rng):
        for _ in range(20):
            plant, weights = random_stabilizable_plant(rng)
            p_star, k_star = lqr.optimal_solution(plant, weights, tol=1e-12)
            re_eval = lqr.policy_evaluation(plant, weights, k_star)
            assert matops.fro(re_eval.p - p_star.p) <= 1e-8


class TestModelBasedPi:
    def test_scalar_chain(self):
        plant, weights = scalar_plant()
        seq = lqr.model_based_pi(plant, weights, lqr.Gain([[-0.25]]), iters=2)
        (p0, k1), (p1, _) = seq
        assert p0.p[0, 0] == pytest.approx(1.0625 / 0.9375, abs=1e-10)
        assert k1.k[0, 0] == pytest.approx(-0.265625, abs=1e-10)
        assert p1.p[0, 0] == pytest.approx(1.1327825, abs=1e-6)
        p_star = (0.25 + np.sqrt(4.0625)) / 2.0
        assert abs(p1.p[0, 0] - p_star) < 1e-3

    def test_optimal_start_is_fixed_point(self):
        plant, weights = scalar_plant()
        p_star, k_star = lqr.optimal_solution(plant, weights, tol=1e-13)
        seq = lqr.model_based_pi(plant, weights, k_star, iters=5)
        for kernel, _ in seq:
            assert abs(kernel.p[0, 0] - p_star.p[0, 0]) <= 1e-9

    def test_tridiagonal_plant_from_perturbed_model(self):
        plant, weights = preset_5_1_plant()
        perturbed = lqr.Plant(plant.a + 0.5 * np.eye(3), plant.b + 0.5 * np.eye(3))
        _, k0 = lqr.optimal_solution(perturbed, weights)
        p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
        seq = lqr.model_based_pi(plant, weights, k0, iters=20)
        errs = [matops.fro(kernel.p - p_star.p) for kernel, _ in seq]
        assert min(errs) <= 1e-8
        drops = [e2 <= e1 for e1, e2 in zip(errs, errs[1:]) if e1 > 1e-8]
        assert all(drops)

    def test_monotone_contractive_and_stabilizing(self, rng):
        max_ratio = 0.0
        for _ in range(100):
            plant, weights = random_stabilizable_plant(rng)
            gain = random_stabilizing_gain(rng, plant, weights, spread=0.2)
            p_star, _ = lqr.optimal_solution(plant, weights, tol=1e-12)
            seq = lqr.model_based_pi(plant, weights, gain, iters=8)
            prev = None
            prev_err = None
            for kernel, next_gain in seq:
                assert lqr.is_stabilizing(plant, next_gain)
                assert matops.is_psd(kernel.p - p_star.p, tol=1e-9)
                if prev is not None:
                    assert matops.is_psd(prev - kernel.p, tol=1e-9)
                err = matops.fro(kernel.p - p_star.p)
                if prev_err is not None and prev_err > 1e-8:
                    ratio = err / prev_err
                    assert ratio < 1.0
                    max_ratio = max(max_ratio, ratio)
                prev, prev_err = kernel.p, err
        assert max_ratio < 1.0


class TestClosedLoopCost:
    def test_zero_state(self):
        _, weights = scalar_plant()
        assert lqr.closed_loop_cost(weights, lqr.ValueKernel([[3.0]]), [0.0]) == 0.0

    def test_euclidean_norm_squared(self):
        weights = lqr.CostWeights(np.eye(2), np.eye(1))
        kernel = lqr.ValueKernel(np.eye(2))
        assert lqr.closed_loop_cost(weights, kernel, [3.0, 4.0]) == pytest.approx(25.0)

    def test_matches_truncated_rollout(self, rng):
        # oracle: accumulate x' (Q + K'RK) x along x_{k+1} = (A+BK) x_k
        plant, weights = random_stabilizable_plant(rng, n_x=2)
        gain = random_stabilizing_gain(rng, plant, weights)
        kernel = lqr.policy_evaluation(plant, weights, gain)
        x0 = rng.uniform(-1, 1, 2)
        f = lqr.closed_loop(plant, gain)
        s = lqr.plant_stage_cost(weights, gain)
        x = x0.copy()
        total = 0.0
        for _ in range(10_000):
            total += float(x @ s @ x)
            x = f @ x
        expected = lqr.closed_loop_cost(weights, kernel, x0)
        assert total == pytest.approx(expected, rel=1e-6)
