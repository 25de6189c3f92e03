# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 sweeps for the quadratic congestion family.

Semantics mirror the generic Python path in gmfg.hjb / gmfg.transport:
classical RK4, one step per grid interval, linear interpolation of the
coefficient paths at stage times, local step halving plus clamp/renormalize
for transport positivity. Status codes instead of exceptions so the module
stays import-independent from the package: 0 ok, 1 positivity failure,
2 nonfinite state.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, log, pow

cnp.import_array()

ctypedef cnp.float64_t f64
ctypedef cnp.int64_t i64

# coupling kind codes, matching gmfg.hamiltonians
cdef int F_ZERO = 0
cdef int F_LOGIT = 1
cdef int F_LINEAR = 2
cdef int F_CONSTANT = 3


cdef inline double edge_weight(double alpha, double beta, double eps,
                               double mi, double mj) noexcept nogil:
    cdef double c = 1.0
    if alpha != 0.0:
        c *= pow(eps + mi, alpha)
    if beta != 0.0:
        c *= pow(eps + mj, beta)
    return c


cdef inline double coupling_value(int kind, double kappa, double ceps,
                                  const double* vec, Py_ssize_t i,
                                  const double* m) noexcept nogil:
    if kind == F_ZERO:
        return 0.0
    elif kind == F_LOGIT:
        return -kappa * log(ceps + m[i])
    elif kind == F_LINEAR:
        return vec[i] * m[i]
    return vec[i]


cdef void hjb_rhs_quad(const i64* nbr, const i64* off, Py_ssize_t n,
                       const double* u, const double* m,
                       double alpha, double beta, double eps,
                       int f_kind, double f_kappa, double f_eps,
                       const double* f_vec, double* out) noexcept nogil:
    cdef Py_ssize_t i, k
    cdef double s, p, c, mi
    for i in range(n):
        s = coupling_value(f_kind, f_kappa, f_eps, f_vec, i, m)
        mi = m[i]
        for k in range(off[i], off[i + 1]):
            p = u[nbr[k]] - u[i]
            if p > 0.0:
                c = edge_weight(alpha, beta, eps, mi, m[nbr[k]])
                s += p * p / (2.0 * c)
        out[i] = -s


def hjb_sweep(const i64[::1] nbr, const i64[::1] off, const double[:, ::1] m_vals,
              const double[::1] terminal, double horizon,
              double alpha, double beta, double eps,
              int f_kind, double f_kappa, double f_eps, const double[::1] f_vec):
    """Backward RK4 sweep; returns (u array, status, failure time)."""
    cdef Py_ssize_t steps = m_vals.shape[0] - 1
    cdef Py_ssize_t n = m_vals.shape[1]
    cdef cnp.ndarray[f64, ndim=2] u_arr = np.empty((steps + 1, n))
    cdef double[:, ::1] u = u_arr
    cdef double dt = horizon / steps
    cdef double h = -dt
    cdef cnp.ndarray[f64, ndim=1] scratch = np.empty(6 * n)
    cdef double* k1 = &scratch[0]
    cdef double* k2 = &scratch[n]
    cdef double* k3 = &scratch[2 * n]
    cdef double* k4 = &scratch[3 * n]
    cdef double* ytmp = &scratch[4 * n]
    cdef double* m_mid = &scratch[5 * n]
    cdef const double* fv = &f_vec[0] if f_vec.shape[0] else NULL
    cdef Py_ssize_t i, k
    cdef double nxt
    cdef int status = 0
    cdef double t_fail = 0.0

    for i in range(n):
        u[steps, i] = terminal[i]
    for k in range(steps, 0, -1):
        for i in range(n):
            m_mid[i] = 0.5 * (m_vals[k, i] + m_vals[k - 1, i])
        hjb_rhs_quad(&nbr[0] if nbr.shape[0] else NULL, &off[0], n, &u[k, 0],
                     &m_vals[k, 0], alpha, beta, eps, f_kind, f_kappa, f_eps,
                     fv, k1)
        for i in range(n):
            ytmp[i] = u[k, i] + (0.5 * h) * k1[i]
        hjb_rhs_quad(&nbr[0] if nbr.shape[0] else NULL, &off[0], n, ytmp,
                     m_mid, alpha, beta, eps, f_kind, f_kappa, f_eps, fv, k2)
        for i in range(n):
            ytmp[i] = u[k, i] + (0.5 * h) * k2[i]
        hjb_rhs_quad(&nbr[0] if nbr.shape[0] else NULL, &off[0], n, ytmp,
                     m_mid, alpha, beta, eps, f_kind, f_kappa, f_eps, fv, k3)
        for i in range(n):
            ytmp[i] = u[k, i] + h * k3[i]
        hjb_rhs_quad(&nbr[0] if nbr.shape[0] else NULL, &off[0], n, ytmp,
                     &m_vals[k - 1, 0], alpha, beta, eps, f_kind, f_kappa,
                     f_eps, fv, k4)
        for i in range(n):
            nxt = u[k, i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not isfinite(nxt):
                status = 2
                t_fail = (k - 1) * dt
                break
            u[k - 1, i] = nxt
        if status:
            break
    return u_arr, status, t_fail


cdef void transport_rhs(const i64* esrc, const i64* edst, Py_ssize_t n_edges,
                        Py_ssize_t n, const double* u, const double* mc,
                        const double* y, double alpha, double beta, double eps,
                        double* flows, double* out) noexcept nogil:
    # out-flows then in-flows, matching np.subtract.at / np.add.at order
    cdef Py_ssize_t e, i
    cdef double p, c, r
    for i in range(n):
        out[i] = 0.0
    for e in range(n_edges):
        p = u[edst[e]] - u[esrc[e]]
        if p > 0.0:
            c = edge_weight(alpha, beta, eps, mc[esrc[e]], mc[edst[e]])
            r = p / c
        else:
            r = 0.0
        flows[e] = r * y[esrc[e]]
    for e in range(n_edges):
        out[esrc[e]] -= flows[e]
    for e in range(n_edges):
        out[edst[e]] += flows[e]


cdef inline void interp_row(const double* lo, const double* hi, double theta,
                            Py_ssize_t n, double* out) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = (1.0 - theta) * lo[i] + theta * hi[i]


def transport_sweep(const i64[::1] esrc, const i64[::1] edst, const double[:, ::1] u_vals,
                    const double[:, ::1] m_coef, const double[::1] m0, double horizon,
                    double alpha, double beta, double eps,
                    double pos_tol, int max_halvings):
    """Forward RK4 sweep of the fixed-point transport; returns
    (m array, status, failure time, worst value)."""
    cdef Py_ssize_t steps = u_vals.shape[0] - 1
    cdef Py_ssize_t n = u_vals.shape[1]
    cdef Py_ssize_t n_edges = esrc.shape[0]
    cdef cnp.ndarray[f64, ndim=2] out_arr = np.empty((steps + 1, n))
    cdef double[:, ::1] out = out_arr
    cdef double dt = horizon / steps
    cdef cnp.ndarray[f64, ndim=1] scratch = np.empty(10 * n + max(n_edges, 1))
    cdef double* y = &scratch[0]
    cdef double* ycur = &scratch[n]
    cdef double* k1 = &scratch[2 * n]
    cdef double* k2 = &scratch[3 * n]
    cdef double* k3 = &scratch[4 * n]
    cdef double* k4 = &scratch[5 * n]
    cdef double* ytmp = &scratch[6 * n]
    cdef double* u_s = &scratch[7 * n]
    cdef double* m_s = &scratch[8 * n]
    cdef double* u_e = &scratch[9 * n]
    cdef double* flows = &scratch[10 * n]
    cdef const i64* src = &esrc[0] if n_edges else NULL
    cdef const i64* dst = &edst[0] if n_edges else NULL
    cdef Py_ssize_t i, k, s
    cdef int n_sub, attempt, accepted, clamped
    cdef double hs, theta, worst, ssum, v
    cdef int status = 0
    cdef double t_fail = 0.0
    cdef double worst_out = 0.0

    for i in range(n):
        out[0, i] = m0[i]
        y[i] = m0[i]

    for k in range(steps):
        accepted = 0
        n_sub = 1
        worst = 0.0
        for attempt in range(max_halvings + 1):
            hs = dt / n_sub
            for i in range(n):
                ycur[i] = y[i]
            for s in range(n_sub):
                # stage coefficient paths at theta, theta + 1/(2 n_sub), ...
                theta = (<double> s) / n_sub
                interp_row(&u_vals[k, 0], &u_vals[k + 1, 0], theta, n, u_s)
                interp_row(&m_coef[k, 0], &m_coef[k + 1, 0], theta, n, m_s)
                transport_rhs(src, dst, n_edges, n, u_s, m_s, ycur,
                              alpha, beta, eps, flows, k1)
                theta = (s + 0.5) / n_sub
                interp_row(&u_vals[k, 0], &u_vals[k + 1, 0], theta, n, u_s)
                interp_row(&m_coef[k, 0], &m_coef[k + 1, 0], theta, n, m_s)
                for i in range(n):
                    ytmp[i] = ycur[i] + (0.5 * hs) * k1[i]
                transport_rhs(src, dst, n_edges, n, u_s, m_s, ytmp,
                              alpha, beta, eps, flows, k2)
                for i in range(n):
                    ytmp[i] = ycur[i] + (0.5 * hs) * k2[i]
                transport_rhs(src, dst, n_edges, n, u_s, m_s, ytmp,
                              alpha, beta, eps, flows, k3)
                theta = (s + 1.0) / n_sub
                interp_row(&u_vals[k, 0], &u_vals[k + 1, 0], theta, n, u_e)
                interp_row(&m_coef[k, 0], &m_coef[k + 1, 0], theta, n, m_s)
                for i in range(n):
                    ytmp[i] = ycur[i] + hs * k3[i]
                transport_rhs(src, dst, n_edges, n, u_e, m_s, ytmp,
                              alpha, beta, eps, flows, k4)
                for i in range(n):
                    ycur[i] = ycur[i] + (hs / 6.0) * (
                        k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]
                    )
            worst = ycur[0]
            for i in range(n):
                if not isfinite(ycur[i]):
                    return out_arr, 2, (k + 1) * dt, 0.0
                if ycur[i] < worst:
                    worst = ycur[i]
            if worst >= -pos_tol:
                accepted = 1
                break
            n_sub *= 2
        if not accepted:
            status = 1
            t_fail = (k + 1) * dt
            worst_out = worst
            break
        clamped = 0
        for i in range(n):
            if ycur[i] < 0.0:
                ycur[i] = 0.0
                clamped = 1
        if clamped:
            ssum = 0.0
            for i in range(n):
                ssum += ycur[i]
            for i in range(n):
                ycur[i] /= ssum
        for i in range(n):
            y[i] = ycur[i]
            out[k + 1, i] = ycur[i]
    return out_arr, status, t_fail, worst_out
