# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log, INFINITY, M_PI
from scipy.special.cython_special cimport i0e

cnp.import_array()

cdef double LOG_SQRT_2PI = 0.5 * log(2.0 * M_PI)
cdef double TINY = 2.2250738585072014e-308
# exp() of anything below this is exactly 0.0 in double precision
cdef double UNDERFLOW = -746.0


def distance_terms(d_los, d_hat, sigma, double p_mp, double gamma_r,
                   double gamma_f, double bias, double d_max):
    cdef double[::1] dl = np.ascontiguousarray(d_los, dtype=np.float64)
    cdef double[::1] dh = np.ascontiguousarray(d_hat, dtype=np.float64)
    cdef double[::1] sg = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef Py_ssize_t r_count = dl.shape[0], m_count = dh.shape[0]
    out_sum = np.zeros(r_count)
    out_ratio = np.empty((r_count, m_count))
    cdef double[::1] nl_sum = out_sum
    cdef double[:, ::1] ratio = out_ratio
    cdef double[::1] log_sig = np.empty(m_count)
    cdef double[::1] inv_sig = np.empty(m_count)
    cdef double[::1] fa = np.empty(m_count)
    cdef double scale = (gamma_f + gamma_r) / (gamma_f * gamma_f)
    cdef double inv_r = 1.0 / gamma_r, inv_f = 1.0 / gamma_f
    cdef Py_ssize_t r, m
    cdef double res, delta, f_mp, f_nl, log_fnl, acc

    for m in range(m_count):
        log_sig[m] = log(sg[m])
        inv_sig[m] = 1.0 / sg[m]
        fa[m] = (1.0 - p_mp) / d_max if 0.0 <= dh[m] <= d_max else 0.0

    for r in range(r_count):
        acc = 0.0
        for m in range(m_count):
            res = (dh[m] - dl[r]) * inv_sig[m]
            delta = dh[m] - dl[r] - bias
            if delta > 0 and p_mp > 0:
                f_mp = scale * (-expm1(-delta * inv_r)) * exp(-delta * inv_f)
            else:
                f_mp = 0.0
            f_nl = p_mp * f_mp + fa[m]
            if f_nl < TINY:
                f_nl = TINY
            log_fnl = log(f_nl)
            acc += log_fnl
            ratio[r, m] = -0.5 * res * res - log_sig[m] - LOG_SQRT_2PI - log_fnl
        nl_sum[r] = acc
    return out_sum, out_ratio


def row_log_mix(log_base, log_ratio, double log_c0, log_w):
    cdef double[::1] base = np.ascontiguousarray(log_base, dtype=np.float64)
    cdef double[:, ::1] lr = np.ascontiguousarray(log_ratio, dtype=np.float64)
    cdef double[::1] lw = np.ascontiguousarray(log_w, dtype=np.float64)
    cdef Py_ssize_t r_count = lr.shape[0], m_count = lr.shape[1]
    result = np.empty(r_count)
    cdef double[::1] out = result
    cdef Py_ssize_t r, m
    cdef double top, t, s

    for r in range(r_count):
        top = log_c0
        for m in range(m_count):
            t = lr[r, m] + lw[m]
            if t > top:
                top = t
        if top == -INFINITY:
            out[r] = -INFINITY
            continue
        s = exp(log_c0 - top)
        for m in range(m_count):
            t = lr[r, m] + lw[m] - top
            if t > UNDERFLOW:
                s += exp(t)
        out[r] = base[r] + top + log(s)
    return result


def column_log_mix(log_ratio, log_weight):
    cdef double[:, ::1] lr = np.ascontiguousarray(log_ratio, dtype=np.float64)
    cdef double[::1] lw = np.ascontiguousarray(log_weight, dtype=np.float64)
    cdef Py_ssize_t r_count = lr.shape[0], m_count = lr.shape[1]
    result = np.empty(m_count)
    cdef double[::1] out = result
    cdef double[::1] top = np.full(m_count, -INFINITY)
    cdef double[::1] acc = np.zeros(m_count)
    cdef Py_ssize_t r, m
    cdef double t

    for r in range(r_count):
        for m in range(m_count):
            t = lr[r, m] + lw[r]
            if t > top[m]:
                top[m] = t
    for r in range(r_count):
        for m in range(m_count):
            t = lr[r, m] + lw[r] - top[m]
            if t > UNDERFLOW:
                acc[m] += exp(t)
    for m in range(m_count):
        out[m] = -INFINITY if top[m] == -INFINITY else top[m] + log(acc[m])
    return result


def systematic_resample(weights, Py_ssize_t n, double offset):
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t size = w.shape[0]
    result = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = result
    cdef double total = 0.0, running
    cdef Py_ssize_t i, k = 0

    # same summation order as np.cumsum so both backends pick identical indices
    for i in range(size):
        total += w[i]
    running = w[0]
    for i in range(n):
        while (i + offset) / n >= running / total and k < size - 1:
            k += 1
            running += w[k]
        idx[i] = k
    return result


def rice_rayleigh_log_ratio(u, u_hat):
    """(K, M) array of -u^2/2 + u*u_hat + log i0e(u*u_hat)."""
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] uh = np.ascontiguousarray(u_hat, dtype=np.float64)
    cdef Py_ssize_t k_count = uu.shape[0], m_count = uh.shape[0]
    result = np.empty((k_count, m_count))
    cdef double[:, ::1] out = result
    cdef Py_ssize_t k, m
    cdef double z, half_sq
    with nogil:
        for k in range(k_count):
            half_sq = 0.5 * uu[k] * uu[k]
            for m in range(m_count):
                z = uu[k] * uh[m]
                out[k, m] = -half_sq + z + log(i0e(z))
    return result
