# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels.

Same operation sequences as ``momentmap._kernels`` — see that module for the
bit-level contract.  Every loop below mirrors its numpy counterpart
operation for operation; the build disables floating-point contraction so
the scalar rounding sequence is identical.
"""

import numpy as np

cimport cython
from libc.math cimport fabs, fabsf, hypot, hypotf, sqrt, sqrtf

ctypedef fused real:
    float
    double


cdef inline real _hypot(real a, real b) noexcept nogil:
    if real is float:
        return hypotf(a, b)
    else:
        return hypot(a, b)


cdef inline real _sqrt(real a) noexcept nogil:
    if real is float:
        return sqrtf(a)
    else:
        return sqrt(a)


cdef inline real _fabs(real a) noexcept nogil:
    if real is float:
        return fabsf(a)
    else:
        return fabs(a)


def cholesky_lower(real[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    out_arr = np.tril(np.asarray(a))
    cdef real[:, ::1] l = out_arr
    cdef real piv, t
    for k in range(n):
        piv = l[k, k]
        if not piv > 0:
            raise ValueError(f"pivot {k} is not positive")
        piv = _sqrt(piv)
        l[k, k] = piv
        for i in range(k + 1, n):
            l[i, k] = l[i, k] / piv
        for i in range(k + 1, n):
            for j in range(k + 1, i + 1):
                t = l[i, k] * l[j, k]
                l[i, j] = l[i, j] - t
    return out_arr


def givens_qr_r(real[:, ::1] b):
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t n = b.shape[1]
    cdef Py_ssize_t i, j, k
    a_arr = np.array(np.asarray(b), copy=True)
    cdef real[:, ::1] a = a_arr
    cdef real aa, bb, h, c, s, t1, t2
    for k in range(n):
        for i in range(m - 1, k, -1):
            bb = a[i, k]
            if bb == 0:
                continue
            aa = a[k, k]
            h = _hypot(aa, bb)
            c = aa / h
            s = bb / h
            for j in range(k, n):
                t1 = a[k, j]
                t2 = a[i, j]
                a[k, j] = c * t1 + s * t2
                a[i, j] = c * t2 - s * t1
            a[k, k] = h
            a[i, k] = 0
    r_arr = np.triu(a_arr[:n, :n])
    cdef real[:, ::1] r = r_arr
    for i in range(n):
        if r[i, i] < 0:
            for j in range(n):
                r[i, j] = -r[i, j]
    return r_arr


def chol_downdate(real[:, ::1] s, real[::1] v):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t i, j
    out_arr = np.array(np.asarray(s), copy=True)
    cdef real[:, ::1] out = out_arr
    if real is float:
        w_arr = np.zeros(n, np.float32)
        c_arr = np.zeros(n, np.float32)
        s_arr = np.zeros(n, np.float32)
        eps = <double>np.finfo(np.float32).eps
    else:
        w_arr = np.zeros(n, np.float64)
        c_arr = np.zeros(n, np.float64)
        s_arr = np.zeros(n, np.float64)
        eps = <double>np.finfo(np.float64).eps
    cdef real[::1] w = w_arr
    cdef real[::1] c = c_arr
    cdef real[::1] s_ = s_arr
    cdef real acc, q, alpha, scale, ca, sa, nrm, xx, t
    for i in range(n):
        acc = v[i]
        for j in range(i):
            acc = acc - out[i, j] * w[j]
        w[i] = acc / out[i, i]
    q = 1
    for i in range(n):
        q = q - w[i] * w[i]
    if not q > eps:
        raise ValueError("downdate would break positive definiteness")
    alpha = _sqrt(q)
    for i in range(n - 1, -1, -1):
        scale = alpha + _fabs(w[i])
        ca = alpha / scale
        sa = w[i] / scale
        nrm = _hypot(ca, sa)
        c[i] = ca / nrm
        s_[i] = sa / nrm
        alpha = scale * nrm
    for j in range(n):
        xx = 0
        for i in range(j, -1, -1):
            t = c[i] * xx + s_[i] * out[j, i]
            out[j, i] = c[i] * out[j, i] - s_[i] * xx
            xx = t
    return out_arr


def gemm(real[:, ::1] a, real[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t kk = a.shape[1]
    cdef Py_ssize_t n = b.shape[1]
    cdef Py_ssize_t i, j, k
    if real is float:
        c_arr = np.zeros((m, n), np.float32)
    else:
        c_arr = np.zeros((m, n), np.float64)
    cdef real[:, ::1] c = c_arr
    cdef real t
    for k in range(kk):
        for i in range(m):
            for j in range(n):
                t = a[i, k] * b[k, j]
                c[i, j] = c[i, j] + t
    return c_arr


def gemv(real[:, ::1] a, real[::1] x):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    cdef Py_ssize_t i, j
    if real is float:
        y_arr = np.zeros(m, np.float32)
    else:
        y_arr = np.zeros(m, np.float64)
    cdef real[::1] y = y_arr
    cdef real t
    for j in range(n):
        for i in range(m):
            t = a[i, j] * x[j]
            y[i] = y[i] + t
    return y_arr


def mean_correction(real[:, :, ::1] psi, real[:, ::1] sx):
    cdef Py_ssize_t m = psi.shape[0]
    cdef Py_ssize_t n = psi.shape[1]
    cdef Py_ssize_t ncols = sx.shape[1]
    cdef Py_ssize_t i, j, k, l
    if real is float:
        dm_arr = np.zeros(m, np.float32)
        z_arr = np.zeros((m, n), np.float32)
        q_arr = np.zeros(m, np.float32)
    else:
        dm_arr = np.zeros(m, np.float64)
        z_arr = np.zeros((m, n), np.float64)
        q_arr = np.zeros(m, np.float64)
    cdef real[::1] dm = dm_arr
    cdef real[:, ::1] z = z_arr
    cdef real[::1] q = q_arr
    cdef real t, yj
    cdef real half = <real>0.5
    for l in range(ncols):
        for i in range(m):
            for k in range(n):
                z[i, k] = 0
        for j in range(n):
            yj = sx[j, l]
            for i in range(m):
                for k in range(n):
                    t = psi[i, j, k] * yj
                    z[i, k] = z[i, k] + t
        for i in range(m):
            q[i] = 0
        for k in range(n):
            yj = sx[k, l]
            for i in range(m):
                t = z[i, k] * yj
                q[i] = q[i] + t
        for i in range(m):
            dm[i] = dm[i] + q[i]
    for i in range(m):
        dm[i] = half * dm[i]
    return dm_arr


def hess_quad(real[:, :, ::1] psi, real[::1] u):
    cdef Py_ssize_t m = psi.shape[0]
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k, l
    if real is float:
        t_arr = np.zeros((m, n), np.float32)
        p_arr = np.zeros(m, np.float32)
    else:
        t_arr = np.zeros((m, n), np.float64)
        p_arr = np.zeros(m, np.float64)
    cdef real[:, ::1] t = t_arr
    cdef real[::1] p = p_arr
    cdef real ul, tt
    for l in range(n):
        ul = u[l]
        for i in range(m):
            for k in range(n):
                tt = psi[i, k, l] * ul
                t[i, k] = t[i, k] + tt
    for k in range(n):
        ul = u[k]
        for i in range(m):
            tt = t[i, k] * ul
            p[i] = p[i] + tt
    return p_arr
