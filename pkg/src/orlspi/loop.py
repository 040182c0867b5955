"""The coupled identification / policy-update loop.

Each timestep: evaluate the current gain against the current model estimate,
excite the true plant (feedback plus dither), consume the transition with the
recursive least-squares update, then improve the gain from the new estimate.
Two gain-update rules are provided: exact policy improvement and a fixed-step
gradient baseline.

If the current gain stops stabilizing the current estimate, the loop records
the event and re-anchors the gain by solving the estimate's own Riccati
equation; state blow-up beyond a cap aborts the run with diagnostics.
"""

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Optional

import numpy as np

from . import backend, lqr, matops, noise, rng, status
from .errors import CertaintyEquivalenceError, DivergenceError, NonStabilizableError, OrlspiError

DEFAULT_STATE_CAP = 1e9
DEFAULT_DARE_TOL = 1e-10


@dataclass
class OrlsPiConfig:
    """One run of the coupled loop against a simulated true plant.

    The true plant is visible only to the simulator and the error columns of
    the trace; the algorithm sees data. theta0 stacks the initial estimate
    [A0_hat B0_hat]; h0 is the information-matrix scale a (H0 = a I) or a
    full SPD matrix. The initial gain is the optimal gain of the initial
    estimate, which must admit a Riccati solution.
    """

    true_plant: lqr.Plant
    weights: lqr.CostWeights
    theta0: np.ndarray
    h0: float | np.ndarray
    x0: np.ndarray
    dither_bound: float
    horizon: int
    seed: int
    excitation: str = "on_policy"  # or "off_policy"
    k_fixed: Optional[np.ndarray] = None
    pg_stepsize: Optional[float] = None
    state_cap: float = DEFAULT_STATE_CAP
    dare_tol: float = DEFAULT_DARE_TOL

    def __post_init__(self):
        self.theta0 = matops.as_matrix(self.theta0, "theta0")
        n, m = self.true_plant.n_x, self.true_plant.n_u
        if self.theta0.shape != (n, n + m):
            raise ValueError(f"OrlsPiConfig: theta0 must be {n}x{n + m}, got {self.theta0.shape}")
        if np.isscalar(self.h0):
            if self.h0 <= 0:
                raise ValueError("OrlsPiConfig: h0 scale must be positive")
        else:
            self.h0 = matops.as_matrix(self.h0, "h0")
        self.x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if self.x0.size != n:
            raise ValueError(f"OrlsPiConfig: x0 must have length {n}")
        if self.dither_bound < 0:
            raise ValueError("OrlsPiConfig: dither_bound must be nonnegative")
        if self.horizon < 1:
            raise ValueError("OrlsPiConfig: horizon must be >= 1")
        if self.excitation not in ("on_policy", "off_policy"):
            raise ValueError(f"OrlsPiConfig: unknown excitation {self.excitation!r}")

    def h0_matrix(self):
        n_d = self.true_plant.n_x + self.true_plant.n_u
        if np.isscalar(self.h0):
            return float(self.h0) * np.eye(n_d)
        return np.array(self.h0, dtype=float)

    def h0_scale(self):
        """The a of H0 = a I, or None if H0 is not a scaled identity."""
        h0 = self.h0_matrix()
        a = h0[0, 0]
        if np.max(np.abs(h0 - a * np.eye(h0.shape[0]))) <= 1e-12 and a > 0:
            return float(a)
        return None


@dataclass
class IterateTrace:
    """Per-timestep record of a run; row i holds step t = i + 1."""

    x: np.ndarray            # (T, n_x) state entering the step
    u: np.ndarray            # (T, n_u) applied input
    e: np.ndarray            # (T, n_u) dither component
    w: np.ndarray            # (T, n_x) process noise
    d: np.ndarray            # (T, n_x + n_u) regressor [x; u]
    theta_hat: np.ndarray    # (T, n_x, n_x + n_u) estimate after the step
    p_hat: np.ndarray        # (T, n_x, n_x) evaluated kernel
    k_hat: np.ndarray        # (T, n_u, n_x) gain used at the step
    err_theta: np.ndarray    # |theta_hat_t - theta|
    err_p: np.ndarray        # |p_hat_t - P*|
    err_k: np.ndarray        # |k_hat_t - K*|
    lambda_min_h: np.ndarray
    breakdown: np.ndarray    # 0 none, 1 re-anchored, 2 re-anchor failed
    p_star: np.ndarray = field(repr=False, default=None)
    k_star: np.ndarray = field(repr=False, default=None)

    @property
    def horizon(self):
        return self.x.shape[0]

    def breakdown_count(self):
        return int(np.count_nonzero(self.breakdown))


def ce_policy_evaluation(theta_hat, weights, k_hat):
    """Kernel of the gain under the estimated model.

    Splits theta_hat into (A_hat, B_hat) and solves the Bellman equation for
    that model. Raises CertaintyEquivalenceError when the gain does not
    stabilize the estimate.
    """
    theta_hat = matops.as_matrix(theta_hat, "theta_hat")
    n = theta_hat.shape[0]
    est = lqr.Plant(theta_hat[:, :n], theta_hat[:, n:])
    f = lqr.closed_loop(est, k_hat)
    rho = matops.spectral_radius(f)
    if rho >= 1.0 - lqr.STABILITY_MARGIN:
        raise CertaintyEquivalenceError(
            f"gain does not stabilize the current estimate (spectral radius {rho:.6f})",
            spectral_radius=rho,
        )
    return lqr.policy_evaluation(est, weights, k_hat)


def excitation_input(mode, k_hat, k_fixed, x, e):
    """Applied input: feedback (current or fixed gain) plus dither."""
    x = np.asarray(x, dtype=float).reshape(-1)
    e = np.asarray(e, dtype=float).reshape(-1)
    if mode == "on_policy":
        return k_hat.k @ x + e
    if mode == "off_policy":
        if k_fixed is None:
            raise ValueError("excitation_input: off_policy mode needs a fixed gain")
        return k_fixed.k @ x + e
    raise ValueError(f"excitation_input: unknown mode {mode!r}")


def dither_sample(seed, t, e_bar, n_u):
    """Dither vector at step t, entries uniform on [-e_bar, e_bar]."""
    if e_bar < 0:
        raise ValueError("dither_sample: e_bar must be nonnegative")
    return rng.uniform_box(seed, rng.DITHER_STREAM, t, e_bar, n_u)


def state_bound(b_norm, e_bar, w_sup, k_cl_bar, x0_norm):
    """Closed-loop state cap max((|B| e_bar + |w|_sup)/(1 - K_cl), |x0|).

    k_cl_bar is a user-supplied (or trace-measured) bound in [0, 1) on the
    closed-loop induced norm.
    """
    if not 0.0 <= k_cl_bar < 1.0:
        raise ValueError("state_bound: k_cl_bar must lie in [0, 1)")
    return max((b_norm * e_bar + w_sup) / (1.0 - k_cl_bar), x0_norm)


def data_bound(k_bar, x_bar, e_bar):
    """Regressor cap (1 + K_bar) x_bar + e_bar."""
    if min(k_bar, x_bar, e_bar) < 0.0:
        raise ValueError("data_bound: inputs must be nonnegative")
    return (1.0 + k_bar) * x_bar + e_bar


def _initial_gain(theta0, weights, dare_tol):
    """Optimal gain (and kernel) of the initial estimate's own LQR problem."""
    n = theta0.shape[0]
    est = lqr.Plant(theta0[:, :n], theta0[:, n:])
    kernel = lqr.dare_value_iteration(est, weights, tol=dare_tol)
    return lqr.policy_improvement(est, weights, kernel).k, kernel.p


def _build_workspace(cfg, schedule, pg_mode, stepper_name=None):
    plant, weights = cfg.true_plant, cfg.weights
    n, m = plant.n_x, plant.n_u
    if schedule.dimension != n:
        raise ValueError(
            f"noise schedule dimension {schedule.dimension} does not match the plant ({n})"
        )
    p_star, k_star = lqr.optimal_solution(plant, weights, tol=cfg.dare_tol)
    k1, p_init = _initial_gain(cfg.theta0, weights, cfg.dare_tol)
    if cfg.excitation == "off_policy":
        k_fixed = np.array(cfg.k_fixed, dtype=float) if cfg.k_fixed is not None else k1.copy()
    else:
        k_fixed = np.zeros((m, n))
    horizon = cfg.horizon

    w_arr = noise.noise_trace(schedule, horizon)
    e_arr = np.zeros((horizon, m))
    if cfg.dither_bound > 0.0:
        batch = rng.StreamBatch(cfg.seed, rng.DITHER_STREAM)
        for t in range(1, horizon + 1):
            e_arr[t - 1] = batch.generator_at(t).uniform(-cfg.dither_bound, cfg.dither_bound, m)

    ws = SimpleNamespace(
        n=n,
        m=m,
        horizon=horizon,
        theta=cfg.theta0.copy(),
        h=cfg.h0_matrix(),
        k=k1.copy(),
        x=cfg.x0.copy(),
        p_prev=p_init.copy(),
        th_true=np.hstack([plant.a, plant.b]),
        q=weights.q.copy(),
        r=weights.r.copy(),
        noise=w_arr,
        dither=e_arr,
        use_fixed=cfg.excitation == "off_policy",
        k_fixed=k_fixed,
        pg_mode=pg_mode,
        pg_gamma=float(cfg.pg_stepsize or 0.0),
        p_star=p_star.p.copy(),
        k_star=k_star.k.copy(),
        x_cap=cfg.state_cap,
        margin=lqr.STABILITY_MARGIN,
        tr_x=np.zeros((horizon, n)),
        tr_u=np.zeros((horizon, m)),
        tr_d=np.zeros((horizon, n + m)),
        tr_theta=np.zeros((horizon, n, n + m)),
        tr_p=np.zeros((horizon, n, n)),
        tr_k=np.zeros((horizon, m, n)),
        tr_err_p=np.zeros(horizon),
        tr_err_theta=np.zeros(horizon),
        tr_err_k=np.zeros(horizon),
        tr_lam=np.zeros(horizon),
        tr_flag=np.zeros(horizon, dtype=np.int64),
    )
    ws._stepper = backend.get_stepper(stepper_name)
    return ws


def _trace_from_workspace(ws, upto):
    sl = slice(0, upto)
    return IterateTrace(
        x=ws.tr_x[sl].copy(),
        u=ws.tr_u[sl].copy(),
        e=ws.dither[sl].copy(),
        w=ws.noise[sl].copy(),
        d=ws.tr_d[sl].copy(),
        theta_hat=ws.tr_theta[sl].copy(),
        p_hat=ws.tr_p[sl].copy(),
        k_hat=ws.tr_k[sl].copy(),
        err_theta=ws.tr_err_theta[sl].copy(),
        err_p=ws.tr_err_p[sl].copy(),
        err_k=ws.tr_err_k[sl].copy(),
        lambda_min_h=ws.tr_lam[sl].copy(),
        breakdown=ws.tr_flag[sl].copy(),
        p_star=ws.p_star.copy(),
        k_star=ws.k_star.copy(),
    )


def _drive(cfg, schedule, pg_mode, stepper_name=None):
    ws = _build_workspace(cfg, schedule, pg_mode, stepper_name)
    weights = cfg.weights
    t = 1
    t_skip = -1
    while True:
        code, t = ws._stepper.step_range(ws, t, t_skip)
        t_skip = -1
        if code == status.DONE:
            return _trace_from_workspace(ws, ws.horizon)
        if code == status.BREAKDOWN:
            i = t - 1
            if ws.tr_flag[i] == 0:
                ws.tr_flag[i] = 1
                try:
                    n = ws.n
                    est = lqr.Plant(ws.theta[:, :n], ws.theta[:, n:])
                    kernel = lqr.dare_value_iteration(est, weights, tol=cfg.dare_tol)
                    ws.k[:] = lqr.policy_improvement(est, weights, kernel).k
                    continue  # re-enter at the same step with the re-anchored gain
                except NonStabilizableError:
                    pass
            # re-anchor unavailable (or repeated at the same step): carry the
            # previous kernel, keep the gain, move on
            ws.tr_flag[i] = 2
            t_skip = t
            continue
        if code == status.DIVERGED:
            trace = _trace_from_workspace(ws, t)
            x_norm = float(np.linalg.norm(ws.x))
            raise DivergenceError(
                f"state norm {x_norm:.3e} exceeded the cap {ws.x_cap:.1e} entering step {t + 1}",
                step=t + 1,
                state_norm=x_norm,
                trace=trace,
            )
        raise OrlspiError(f"loop stepper reported a numeric failure at step {t}")


def orls_pi_run(cfg, schedule, stepper_name=None):
    """Run the loop with exact policy improvement; returns the full trace."""
    return _drive(cfg, schedule, pg_mode=False, stepper_name=stepper_name)


def orls_pg_run(cfg, schedule, stepper_name=None):
    """Run the loop with the fixed-step gradient gain update."""
    if cfg.pg_stepsize is None:
        raise ValueError("orls_pg_run: cfg.pg_stepsize is required")
    return _drive(cfg, schedule, pg_mode=True, stepper_name=stepper_name)


def realized_k_cl(trace, plant, start=0):
    """Largest induced-2 norm of A + B K_hat_t along a trace (bound surrogate).

    The closed-loop norm cap of the state bound is a supremum over sets with
    no closed form; the realized maximum over an on-policy trace (optionally
    skipping the transient prefix) is its tightest observable stand-in.
    """
    worst = 0.0
    for k in trace.k_hat[start:]:
        f = plant.a + plant.b @ k
        worst = max(worst, float(np.linalg.norm(f, 2)))
    return worst
