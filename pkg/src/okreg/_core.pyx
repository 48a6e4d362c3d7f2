# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-round kernels.

Same contracts as ``_core_py``; loops replace numpy calls because the
vectors involved are small enough that call overhead dominates.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, NAN

cnp.import_array()

NAME = "cython"


def gaussian_cross(const double[:, ::1] X, const double[::1] x, double gamma):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1], i, k
    cdef double s, diff
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        s = 0.0
        for k in range(d):
            diff = X[i, k] - x[k]
            s += diff * diff
        o[i] = exp(-gamma * s)
    return out


cdef double _sm_update(double[:, ::1] inv, const double[::1] u, double c,
                       double[::1] v) noexcept nogil:
    cdef Py_ssize_t n = inv.shape[0], i, k
    cdef double s, q = 0.0, denom, scale
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += inv[i, k] * u[k]
        v[i] = s
        q += u[i] * s
    denom = 1.0 + c * q
    if denom <= 0.0:
        return denom
    scale = c / denom
    for i in range(n):
        for k in range(n):
            inv[i, k] -= scale * v[i] * v[k]
    return denom


def sm_update(double[:, ::1] inv, const double[::1] u, double c):
    cdef double[::1] v = np.empty(inv.shape[0], dtype=np.float64)
    return _sm_update(inv, u, c, v)


cdef double _slab_project(const double[::1] w_tilde, const double[:, ::1] A_inv,
                          const double[::1] phi, double U, double[::1] out,
                          double[::1] v) noexcept nogil:
    cdef Py_ssize_t n = w_tilde.shape[0], i, k
    cdef double y_tilde = 0.0, m, q = 0.0, s
    for i in range(n):
        y_tilde += w_tilde[i] * phi[i]
        out[i] = w_tilde[i]
    if fabs(y_tilde) <= U:
        return 0.0
    m = fabs(y_tilde) - U
    if y_tilde < 0.0:
        m = -m
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += A_inv[i, k] * phi[k]
        v[i] = s
        q += phi[i] * s
    if q <= 0.0:
        return NAN
    for i in range(n):
        out[i] = w_tilde[i] - (m / q) * v[i]
    return m


def slab_project(const double[::1] w_tilde, const double[:, ::1] A_inv,
                 const double[::1] phi, double U):
    n = w_tilde.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    m = _slab_project(w_tilde, A_inv, phi, U, out, v)
    return out, m


def ons_round(double[:, ::1] A, double[:, ::1] A_inv, double[::1] w,
              double[::1] w_pending, bint has_pending, const double[::1] phi,
              double y, double eta, double U):
    cdef Py_ssize_t n = w.shape[0], i, k
    cdef double m = 0.0, y_hat = 0.0, g, c, denom, s
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    cdef double[::1] tmp = np.empty(n, dtype=np.float64)
    if has_pending:
        m = _slab_project(w_pending, A_inv, phi, U, tmp, v)
        for i in range(n):
            w[i] = tmp[i]
    for i in range(n):
        y_hat += w[i] * phi[i]
    g = 2.0 * (y_hat - y)
    c = eta * g * g
    for i in range(n):
        for k in range(n):
            A[i, k] += c * phi[i] * phi[k]
    denom = _sm_update(A_inv, phi, c, v)
    if denom <= 0.0:
        return y_hat, g, denom, m
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += A_inv[i, k] * phi[k]
        w_pending[i] = w[i] - g * s
    return y_hat, g, denom, m
