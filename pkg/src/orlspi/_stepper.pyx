# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-timestep loop kernel.

Same contract as the NumPy fallback stepper: runs steps t_start..horizon on
the shared workspace and returns (status, step) early on breakdown,
divergence, or a numeric failure. All dense solves and eigenvalue calls go
straight to LAPACK through scipy's Cython bindings; small matrix products
are hand loops (dimensions are single digits).
"""

import numpy as np

from libc.math cimport sqrt
from scipy.linalg.cython_lapack cimport dgeev, dgesv, dsyev

from . import status

COMPILED = True


cdef inline double _spectral_radius(int n, double[::1] acm, double[::1] wr, double[::1] wi,
                                    double[::1] work, int lwork) noexcept nogil:
    """Largest eigenvalue modulus of the n x n matrix in ``acm`` (destroyed).

    Returns -1.0 on LAPACK failure. Orientation of the buffer is irrelevant
    because a matrix and its transpose share a spectrum.
    """
    cdef char jobn = b'N'
    cdef int info = 0, one = 1, i
    cdef double dummy = 0.0, best = 0.0, mod2
    dgeev(&jobn, &jobn, &n, &acm[0], &n, &wr[0], &wi[0],
          &dummy, &one, &dummy, &one, &work[0], &lwork, &info)
    if info != 0:
        return -1.0
    for i in range(n):
        mod2 = wr[i] * wr[i] + wi[i] * wi[i]
        if mod2 > best:
            best = mod2
    return sqrt(best)


def step_range(ws, int t_start, int t_skip=-1):
    """Run steps t_start..ws.horizon; returns (status_code, step)."""
    cdef int n = ws.n
    cdef int m = ws.m
    cdef int nd = n + m
    cdef int nn = n * n
    cdef int horizon = ws.horizon

    cdef double[:, ::1] theta = ws.theta
    cdef double[:, ::1] h = ws.h
    cdef double[:, ::1] k = ws.k
    cdef double[::1] x = ws.x
    cdef double[:, ::1] p_prev = ws.p_prev
    cdef double[:, ::1] th_true = ws.th_true
    cdef double[:, ::1] q = ws.q
    cdef double[:, ::1] r = ws.r
    cdef double[:, ::1] noise = ws.noise
    cdef double[:, ::1] dither = ws.dither
    cdef double[:, ::1] p_star = ws.p_star
    cdef double[:, ::1] k_star = ws.k_star
    cdef double[:, ::1] k_fixed = ws.k_fixed if ws.use_fixed else ws.k
    cdef bint use_fixed = 1 if ws.use_fixed else 0
    cdef bint pg_mode = 1 if ws.pg_mode else 0
    cdef double pg_gamma = ws.pg_gamma
    cdef double x_cap = ws.x_cap
    cdef double margin = ws.margin

    cdef double[:, ::1] tr_x = ws.tr_x
    cdef double[:, ::1] tr_u = ws.tr_u
    cdef double[:, ::1] tr_d = ws.tr_d
    cdef double[:, :, ::1] tr_theta = ws.tr_theta
    cdef double[:, :, ::1] tr_p = ws.tr_p
    cdef double[:, :, ::1] tr_k = ws.tr_k
    cdef double[::1] tr_err_p = ws.tr_err_p
    cdef double[::1] tr_err_theta = ws.tr_err_theta
    cdef double[::1] tr_err_k = ws.tr_err_k
    cdef double[::1] tr_lam = ws.tr_lam

    # scratch (allocation cost is once per driver re-entry, negligible)
    cdef double[:, ::1] f = np.empty((n, n))
    cdef double[:, ::1] p = np.empty((n, n))
    cdef double[:, ::1] s = np.empty((n, n))
    cdef double[::1] acm = np.empty(nn)
    cdef double[::1] wr = np.empty(n)
    cdef double[::1] wi = np.empty(n)
    cdef int lwork_geev = 16 * n if 16 * n > 64 else 64
    cdef double[::1] work_geev = np.empty(lwork_geev)
    cdef double[::1] lyap = np.empty(nn * nn)
    cdef double[::1] rhs = np.empty(nn)
    cdef int[::1] ipiv_nn = np.empty(nn, dtype=np.intc)
    cdef double[::1] hbuf = np.empty(nd * nd)
    cdef double[::1] yvec = np.empty(nd)
    cdef int[::1] ipiv_nd = np.empty(nd, dtype=np.intc)
    cdef double[::1] wsy = np.empty(nd)
    cdef int lwork_syev = 16 * nd if 16 * nd > 64 else 64
    cdef double[::1] work_syev = np.empty(lwork_syev)
    cdef double[:, ::1] pb = np.empty((n, m))
    cdef double[:, ::1] pa = np.empty((n, n))
    cdef double[:, ::1] btpb = np.empty((m, m))
    cdef double[:, ::1] btpa = np.empty((m, n))
    cdef double[::1] beta_b = np.empty(m * m)
    cdef double[::1] kbuf = np.empty(m * n)
    cdef int[::1] ipiv_m = np.empty(m, dtype=np.intc)
    cdef double[::1] u = np.empty(m)
    cdef double[::1] d = np.empty(nd)
    cdef double[::1] x_next = np.empty(n)
    cdef double[::1] innov = np.empty(n)

    cdef char jobn = b'N'
    cdef char uplo = b'L'
    cdef int info, one = 1, t, i, a_i, b_i, rr, cc, jj, pp, qq
    cdef double rho, acc, nrm

    for t in range(t_start, horizon + 1):
        i = t - 1

        if t == t_skip:
            for rr in range(n):
                for cc in range(n):
                    p[rr, cc] = p_prev[rr, cc]
        else:
            # closed loop of the estimate: F = A_hat + B_hat K
            for rr in range(n):
                for cc in range(n):
                    acc = theta[rr, cc]
                    for jj in range(m):
                        acc += theta[rr, n + jj] * k[jj, cc]
                    f[rr, cc] = acc
                    acm[rr * n + cc] = acc
            rho = _spectral_radius(n, acm, wr, wi, work_geev, lwork_geev)
            if rho < 0.0:
                return status.NUMERIC, t
            if rho >= 1.0 - margin:
                return status.BREAKDOWN, t
            # stage cost S = Q + K' R K
            for rr in range(n):
                for cc in range(n):
                    acc = q[rr, cc]
                    for jj in range(m):
                        for pp in range(m):
                            acc += k[jj, rr] * r[jj, pp] * k[pp, cc]
                    s[rr, cc] = acc
            # vectorized evaluation: (I - F'(.)F) vec(P) = vec(S), column-major
            for qq in range(nn):
                b_i = qq // n
                a_i = qq - b_i * n
                for pp in range(nn):
                    cc = pp // n
                    rr = pp - cc * n
                    acc = -f[a_i, rr] * f[b_i, cc]
                    if pp == qq:
                        acc += 1.0
                    lyap[pp + qq * nn] = acc
            for pp in range(nn):
                cc = pp // n
                rr = pp - cc * n
                rhs[pp] = s[rr, cc]
            dgesv(&nn, &one, &lyap[0], &nn, &ipiv_nn[0], &rhs[0], &nn, &info)
            if info != 0:
                return status.NUMERIC, t
            for rr in range(n):
                for cc in range(n):
                    p[rr, cc] = 0.5 * (rhs[cc * n + rr] + rhs[rr * n + cc])
            for rr in range(n):
                for cc in range(n):
                    p_prev[rr, cc] = p[rr, cc]

        # policy-side trace
        acc = 0.0
        for rr in range(n):
            for cc in range(n):
                tr_p[i, rr, cc] = p[rr, cc]
                acc += (p[rr, cc] - p_star[rr, cc]) ** 2
        tr_err_p[i] = sqrt(acc)
        acc = 0.0
        for rr in range(m):
            for cc in range(n):
                tr_k[i, rr, cc] = k[rr, cc]
                acc += (k[rr, cc] - k_star[rr, cc]) ** 2
        tr_err_k[i] = sqrt(acc)

        # excitation and true-plant transition
        for rr in range(m):
            acc = dither[i, rr]
            if use_fixed:
                for cc in range(n):
                    acc += k_fixed[rr, cc] * x[cc]
            else:
                for cc in range(n):
                    acc += k[rr, cc] * x[cc]
            u[rr] = acc
        for rr in range(n):
            d[rr] = x[rr]
        for rr in range(m):
            d[n + rr] = u[rr]
        for rr in range(n):
            acc = noise[i, rr]
            for cc in range(nd):
                acc += th_true[rr, cc] * d[cc]
            x_next[rr] = acc

        # RLS rank-1 update
        for rr in range(nd):
            for cc in range(nd):
                h[rr, cc] += d[rr] * d[cc]
        for rr in range(nd):
            for cc in range(nd):
                hbuf[rr + cc * nd] = h[rr, cc]
            yvec[rr] = d[rr]
        dgesv(&nd, &one, &hbuf[0], &nd, &ipiv_nd[0], &yvec[0], &nd, &info)
        if info != 0:
            return status.NUMERIC, t
        for rr in range(n):
            acc = x_next[rr]
            for cc in range(nd):
                acc -= theta[rr, cc] * d[cc]
            innov[rr] = acc
        for rr in range(n):
            for cc in range(nd):
                theta[rr, cc] += innov[rr] * yvec[cc]

        # identification-side trace
        acc = 0.0
        for rr in range(n):
            tr_x[i, rr] = x[rr]
        for rr in range(m):
            tr_u[i, rr] = u[rr]
        for rr in range(nd):
            tr_d[i, rr] = d[rr]
        for rr in range(n):
            for cc in range(nd):
                tr_theta[i, rr, cc] = theta[rr, cc]
                acc += (theta[rr, cc] - th_true[rr, cc]) ** 2
        tr_err_theta[i] = sqrt(acc)
        for rr in range(nd):
            for cc in range(nd):
                hbuf[rr + cc * nd] = h[rr, cc]
        dsyev(&jobn, &uplo, &nd, &hbuf[0], &nd, &wsy[0], &work_syev[0], &lwork_syev, &info)
        if info != 0:
            return status.NUMERIC, t
        tr_lam[i] = wsy[0]

        # gain update from the new estimate
        for rr in range(n):
            for cc in range(m):
                acc = 0.0
                for jj in range(n):
                    acc += p[rr, jj] * theta[jj, n + cc]
                pb[rr, cc] = acc
        for rr in range(n):
            for cc in range(n):
                acc = 0.0
                for jj in range(n):
                    acc += p[rr, jj] * theta[jj, cc]
                pa[rr, cc] = acc
        for rr in range(m):
            for cc in range(m):
                acc = 0.0
                for jj in range(n):
                    acc += theta[jj, n + rr] * pb[jj, cc]
                btpb[rr, cc] = acc
        for rr in range(m):
            for cc in range(n):
                acc = 0.0
                for jj in range(n):
                    acc += theta[jj, n + rr] * pa[jj, cc]
                btpa[rr, cc] = acc
        if pg_mode:
            for rr in range(m):
                for cc in range(n):
                    acc = btpa[rr, cc]
                    for jj in range(m):
                        acc += (r[rr, jj] + btpb[rr, jj]) * k[jj, cc]
                    kbuf[rr + cc * m] = acc  # gradient/2, reused below
            for rr in range(m):
                for cc in range(n):
                    k[rr, cc] -= pg_gamma * 2.0 * kbuf[rr + cc * m]
        else:
            for rr in range(m):
                for cc in range(m):
                    beta_b[rr + cc * m] = r[rr, cc] + btpb[rr, cc]
                for cc in range(n):
                    kbuf[rr + cc * m] = btpa[rr, cc]
            dgesv(&m, &n, &beta_b[0], &m, &ipiv_m[0], &kbuf[0], &m, &info)
            if info != 0:
                return status.NUMERIC, t
            for rr in range(m):
                for cc in range(n):
                    k[rr, cc] = -kbuf[rr + cc * m]

        nrm = 0.0
        for rr in range(n):
            x[rr] = x_next[rr]
            nrm += x_next[rr] * x_next[rr]
        if sqrt(nrm) > x_cap:
            return status.DIVERGED, t

    return status.DONE, horizon
