"""NumPy implementation of the per-timestep loop kernel.

Reference semantics for the compiled stepper: both run steps t_start..horizon
on a shared workspace and return early with a status code on a breakdown,
divergence, or numeric failure, leaving the workspace positioned so the
driver can intervene and re-enter at the same step.

Step t does, in order: certainty-equivalent policy evaluation with the
previous estimate; excitation u = K x + e (or a fixed gain); one true-plant
transition; the rank-1 least-squares update; the gain update from the new
estimate. Trace rows are filled in place.
"""

import numpy as np

from . import status

COMPILED = False


def step_range(ws, t_start, t_skip=-1):
    """Run steps t_start..ws.horizon; returns (status_code, step)."""
    n = ws.n
    for t in range(t_start, ws.horizon + 1):
        i = t - 1
        ah = ws.theta[:, :n]
        bh = ws.theta[:, n:]

        if t == t_skip:
            p = ws.p_prev.copy()
        else:
            f = ah + bh @ ws.k
            rho = float(np.max(np.abs(np.linalg.eigvals(f))))
            if rho >= 1.0 - ws.margin:
                return status.BREAKDOWN, t
            s = ws.q + ws.k.T @ ws.r @ ws.k
            lhs = np.eye(n * n) - np.kron(f.T, f.T)
            try:
                v = np.linalg.solve(lhs, s.reshape(-1, order="F"))
            except np.linalg.LinAlgError:
                return status.NUMERIC, t
            p = v.reshape(n, n, order="F")
            p = 0.5 * (p + p.T)
            ws.p_prev[:] = p

        ws.tr_p[i] = p
        ws.tr_k[i] = ws.k
        ws.tr_err_p[i] = np.linalg.norm(p - ws.p_star)
        ws.tr_err_k[i] = np.linalg.norm(ws.k - ws.k_star)

        k_apply = ws.k_fixed if ws.use_fixed else ws.k
        u = k_apply @ ws.x + ws.dither[i]
        d = np.concatenate([ws.x, u])
        x_next = ws.th_true @ d + ws.noise[i]

        ws.h += np.outer(d, d)
        try:
            y = np.linalg.solve(ws.h, d)
        except np.linalg.LinAlgError:
            return status.NUMERIC, t
        ws.theta += np.outer(x_next - ws.theta @ d, y)

        ws.tr_x[i] = ws.x
        ws.tr_u[i] = u
        ws.tr_d[i] = d
        ws.tr_theta[i] = ws.theta
        ws.tr_err_theta[i] = np.linalg.norm(ws.theta - ws.th_true)
        ws.tr_lam[i] = np.linalg.eigvalsh(ws.h)[0]

        ah = ws.theta[:, :n]
        bh = ws.theta[:, n:]
        pb = p @ bh
        btpb = bh.T @ pb
        btpa = bh.T @ (p @ ah)
        if ws.pg_mode:
            grad = 2.0 * ((ws.r + btpb) @ ws.k + btpa)
            ws.k -= ws.pg_gamma * grad
        else:
            try:
                ws.k[:] = -np.linalg.solve(ws.r + btpb, btpa)
            except np.linalg.LinAlgError:
                return status.NUMERIC, t

        ws.x[:] = x_next
        if np.linalg.norm(ws.x) > ws.x_cap:
            return status.DIVERGED, t

    return status.DONE, ws.horizon
