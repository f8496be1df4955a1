# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the fixed-point kernels.

Same contract as ``_reference``; see its docstring.
"""

import numpy as np

from libc.math cimport INFINITY, fabs

DAMPING_FLOOR = 1.0 / 64.0


def mmse_fixed_point(double[:, :] gains2, double[:] powers, double[:] wf,
                     double[:] wx, double sigma2, bint exclude_self=False,
                     beta0=None, double tol=1e-10, int max_iter=500,
                     double damping=0.5):
    cdef Py_ssize_t nf = gains2.shape[0]
    cdef Py_ssize_t nx = gains2.shape[1]
    if beta0 is None:
        # single-user bound; see _reference.mmse_fixed_point
        beta_arr = np.asarray(powers) * (np.asarray(wf) @ np.asarray(gains2)) / sigma2
    else:
        beta_arr = np.array(beta0, dtype=np.float64)
    fresh_arr = np.empty(nx)
    cdef double[::1] beta = beta_arr
    cdef double[::1] fresh = fresh_arr
    cdef double[::1] load = np.empty(nx)
    cdef double[::1] denom = np.empty(nf)
    cdef double lam = damping
    cdef double prev = INFINITY
    cdef double resid = INFINITY
    cdef double top, diff, d, g
    cdef Py_ssize_t it, f, k
    for it in range(1, max_iter + 1):
        for k in range(nx):
            load[k] = wx[k] * powers[k] / (1.0 + beta[k])
            fresh[k] = 0.0
        for f in range(nf):
            d = sigma2
            for k in range(nx):
                d += gains2[f, k] * load[k]
            denom[f] = d
        if exclude_self:
            for f in range(nf):
                d = denom[f]
                for k in range(nx):
                    g = gains2[f, k]
                    fresh[k] += wf[f] * g / (d - g * load[k])
        else:
            for f in range(nf):
                d = denom[f]
                for k in range(nx):
                    fresh[k] += wf[f] * gains2[f, k] / d
        resid = 0.0
        top = 0.0
        for k in range(nx):
            fresh[k] *= powers[k]
            diff = fabs(fresh[k] - beta[k])
            if diff > resid:
                resid = diff
            if fresh[k] > top:
                top = fresh[k]
        if resid <= tol * (1.0 + top):
            return fresh_arr, resid, it, True
        if resid > prev:
            lam = 0.5 * lam
            if lam < DAMPING_FLOOR:
                lam = DAMPING_FLOOR
        prev = resid
        for k in range(nx):
            beta[k] = beta[k] + lam * (fresh[k] - beta[k])
    return beta_arr, resid, max_iter, False


def sic_backward_sweep(double[:, :] gains2, double[:] powers, double[:] wf,
                       double[:] wx, double sigma2):
    cdef Py_ssize_t nf = gains2.shape[0]
    cdef Py_ssize_t nx = gains2.shape[1]
    beta_arr = np.empty(nx)
    cdef double[::1] beta = beta_arr
    cdef double[::1] depth = np.full(nf, sigma2)
    cdef double b, scale
    cdef Py_ssize_t f, k
    for k in range(nx - 1, -1, -1):
        b = 0.0
        for f in range(nf):
            b += wf[f] * gains2[f, k] / depth[f]
        b *= powers[k]
        beta[k] = b
        scale = wx[k] * powers[k] / (1.0 + b)
        for f in range(nf):
            depth[f] += scale * gains2[f, k]
    return beta_arr
