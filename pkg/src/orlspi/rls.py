"""Recursive least squares with an information matrix, and its error bounds.

The estimator tracks theta_hat (the stacked [A_hat B_hat] row block) and the
information matrix H, updated by rank-1 data increments:

    H_t     = H_{t-1} + d_t d_t'
    theta_t = theta_{t-1} + (x_{t+1} - theta_{t-1} d_t) d_t' H_t^{-1}

Also provided: the equivalent regularized batch form, the exact error
decomposition, the windowed local-persistency certificate, and the ISS-style
estimation-error bounds it implies.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import matops


@dataclass
class RlsState:
    """Estimator state: theta_hat is n_x x (n_x + n_u), h is SPD."""

    theta_hat: np.ndarray
    h: np.ndarray
    t: int = 0

    def __post_init__(self):
        self.theta_hat = matops.as_matrix(self.theta_hat, "theta_hat")
        self.h = matops.as_matrix(self.h, "h")
        if self.h.shape[0] != self.h.shape[1] or self.h.shape[0] != self.theta_hat.shape[1]:
            raise ValueError("RlsState: h must be square with size theta_hat.shape[1]")
        if matops.symmetry_defect(self.h) > matops.SYMMETRY_TOL:
            raise ValueError("RlsState: h must be symmetric")
        if matops.min_eigenvalue(self.h) <= 0.0:
            raise ValueError("RlsState: h must be positive definite")


def rls_update(state, d, x_next):
    """One rank-1 update; returns a new RlsState (inputs untouched)."""
    d = np.asarray(d, dtype=float).reshape(-1)
    x_next = np.asarray(x_next, dtype=float).reshape(-1)
    if d.size != state.h.shape[0]:
        raise ValueError(f"rls_update: d has length {d.size}, expected {state.h.shape[0]}")
    if x_next.size != state.theta_hat.shape[0]:
        raise ValueError(
            f"rls_update: x_next has length {x_next.size}, expected {state.theta_hat.shape[0]}"
        )
    h_new = state.h + np.outer(d, d)
    innovation = x_next - state.theta_hat @ d
    theta_new = state.theta_hat + np.outer(innovation, np.linalg.solve(h_new, d))
    return RlsState(theta_hat=theta_new, h=h_new, t=state.t + 1)


def batch_ls_regularized(theta0, h0, data):
    """Closed form of the recursion after consuming ``data``.

    data is a sequence of (d_k, x_{k+1}) pairs; returns
    (theta0 @ H0 + sum x_{k+1} d_k') @ (H0 + sum d_k d_k')^{-1}.
    """
    theta0 = matops.as_matrix(theta0, "theta0")
    h0 = matops.as_matrix(h0, "h0")
    h = h0.copy()
    m = theta0 @ h0
    for d, x_next in data:
        d = np.asarray(d, dtype=float).reshape(-1)
        x_next = np.asarray(x_next, dtype=float).reshape(-1)
        h = h + np.outer(d, d)
        m = m + np.outer(x_next, d)
    return np.linalg.solve(h, m.T).T


def estimation_error_decomposition(theta0, theta_true, h0, data, noise):
    """Exact split of theta_hat_t - theta into initialization and noise terms.

    Requires data generated as x_{k+1} = theta d_k + w_k; returns
    (theta0 - theta) H0 H_t^{-1} + (sum w_k d_k') H_t^{-1}, which equals the
    recursion's error at step t = len(data).
    """
    theta0 = matops.as_matrix(theta0, "theta0")
    theta_true = matops.as_matrix(theta_true, "theta_true")
    h0 = matops.as_matrix(h0, "h0")
    h = h0.copy()
    noise_sum = np.zeros_like(theta0)
    for (d, _), w in zip(data, noise):
        d = np.asarray(d, dtype=float).reshape(-1)
        w = np.asarray(w, dtype=float).reshape(-1)
        h = h + np.outer(d, d)
        noise_sum = noise_sum + np.outer(w, d)
    init_term = (theta0 - theta_true) @ h0
    return np.linalg.solve(h, (init_term + noise_sum).T).T


@dataclass
class PersistencyParams:
    """Windowed excitation certificate: window n_window, stride m_interval, floor alpha."""

    n_window: int
    m_interval: int
    alpha: float

    def __post_init__(self):
        if self.n_window < 1 or self.m_interval < 1:
            raise ValueError("PersistencyParams: window and interval must be >= 1")
        if self.alpha <= 0.0:
            raise ValueError("PersistencyParams: alpha must be positive")


def _window_mins(data, n_window, m_interval):
    """Min eigenvalue of each complete window sum; windows start at 1, 1+M, 1+2M, ..."""
    d = np.asarray(data, dtype=float)
    t_len = d.shape[0]
    mins = []
    j = 1
    while j + n_window - 1 <= t_len:
        block = d[j - 1 : j - 1 + n_window]
        s = block.T @ block
        mins.append(matops.min_eigenvalue(s))
        j += m_interval
    return mins


def check_local_persistency(data, params):
    """True iff every complete window sum dominates alpha * I (1e-10 slack).

    ``data[i]`` is the regressor at time i + 1; windows whose end extends past
    the trace are skipped.
    """
    d = np.asarray(data, dtype=float)
    if d.shape[0] < params.n_window:
        raise ValueError("check_local_persistency: fewer samples than the window length")
    mins = _window_mins(d, params.n_window, params.m_interval)
    return bool(all(m >= params.alpha - 1e-10 for m in mins))


ALPHA_RESOLUTION = 1e-10


def find_persistency_params(data, m_interval, n_max):
    """Smallest window N <= n_max with a positive floor, and the sharpest alpha.

    alpha is the min eigenvalue over all complete windows (resolution 1e-10).
    Returns None when no window length up to n_max certifies the trace.
    """
    d = np.asarray(data, dtype=float)
    for n_window in range(1, n_max + 1):
        if d.shape[0] < n_window:
            break
        mins = _window_mins(d, n_window, m_interval)
        if not mins:
            continue
        alpha = min(mins)
        if alpha > ALPHA_RESOLUTION:
            return PersistencyParams(n_window=n_window, m_interval=m_interval, alpha=float(alpha))
    return None


@dataclass
class RlsBoundParams:
    """Constants entering the estimation-error bounds.

    a is the H0 = a I scale, pers the persistency certificate, d_bar the
    regressor sup norm, n_x/n_u the block sizes of theta.
    """

    a: float
    pers: PersistencyParams
    d_bar: float
    n_x: int
    n_u: int

    def __post_init__(self):
        if self.a <= 0.0 or self.d_bar <= 0.0 or self.n_x < 1 or self.n_u < 1:
            raise ValueError("RlsBoundParams: all parameters must be positive")


def beta_theta(s0, t, params):
    """Initialization-decay bound a (M+N) s0 / (min(a, alpha) t); needs t >= 1."""
    if t < 1:
        raise ValueError("beta_theta: bound is defined for integer t >= 1")
    mn = params.pers.m_interval + params.pers.n_window
    return params.a * mn * s0 / (min(params.a, params.pers.alpha) * t)


def eta(params):
    """Noise amplification constant (n_x + n_u)(M + N) / min(a, alpha)."""
    mn = params.pers.m_interval + params.pers.n_window
    return (params.n_x + params.n_u) * mn / min(params.a, params.pers.alpha)


def gamma_theta(x, params):
    """Noise-to-error gain d_bar * eta * x."""
    if x < 0.0:
        raise ValueError("gamma_theta: argument must be nonnegative")
    return params.d_bar * eta(params) * x


def max_est_error(theta0_err, params, noise_level, kind="pointwise"):
    """Worst-case estimation error over all steps.

    max(initial error, bound at t=1 + noise gain); ``noise_level`` is the
    sup norm of the noise for ``kind='pointwise'`` and the summed-magnitude
    norm for ``kind='energy'``.
    """
    if kind not in ("pointwise", "energy"):
        raise ValueError(f"max_est_error: unknown kind {kind!r}")
    if theta0_err < 0.0 or noise_level < 0.0:
        raise ValueError("max_est_error: inputs must be nonnegative")
    return max(theta0_err, beta_theta(theta0_err, 1, params) + gamma_theta(noise_level, params))


def h_min_eig_growth_check(lambda_mins, params, slack=1e-9):
    """Check lambda_min(H_t) >= a + floor(t / (M+N)) alpha at every recorded t.

    ``lambda_mins[i]`` is the minimum eigenvalue of H at step t = i + 1,
    recorded under a persistent excitation.
    """
    mn = params.pers.m_interval + params.pers.n_window
    for i, lam in enumerate(lambda_mins):
        t = i + 1
        floor = params.a + math.floor(t / mn) * params.pers.alpha
        if lam < floor - slack:
            return False
    return True
