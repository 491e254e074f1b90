# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_pykernels`` for the contract."""
from libc.math cimport exp, log, fabs, INFINITY

import numpy as np


def sinkhorn_scale(const double[:, ::1] K, const double[::1] a, const double[::1] b,
                   double[::1] u, double[::1] v, double tol, long max_iter):
    cdef Py_ssize_t n = K.shape[0], m = K.shape[1], i, j
    cdef double[::1] Kv = np.empty(n)
    cdef double[::1] Ktu = np.empty(m)
    cdef double s, err = INFINITY, d
    cdef long it = 0
    with nogil:
        while True:
            err = 0.0
            for i in range(n):
                s = 0.0
                for j in range(m):
                    s += K[i, j] * v[j]
                Kv[i] = s
                d = fabs(u[i] * s - a[i])
                if d > err:
                    err = d
            if err <= tol or it >= max_iter:
                break
            for j in range(m):
                Ktu[j] = 0.0
            for i in range(n):
                u[i] = a[i] / Kv[i]
                for j in range(m):
                    Ktu[j] += K[i, j] * u[i]
            for j in range(m):
                v[j] = b[j] / Ktu[j]
            it += 1
    return it, err


cdef inline double _lse_row(const double[:, ::1] L, Py_ssize_t i, const double[::1] g) noexcept nogil:
    cdef Py_ssize_t j, m = L.shape[1]
    cdef double mx = -INFINITY, s = 0.0, t
    for j in range(m):
        t = L[i, j] + g[j]
        if t > mx:
            mx = t
    for j in range(m):
        s += exp(L[i, j] + g[j] - mx)
    return mx + log(s)


cdef inline double _lse_col(const double[:, ::1] L, Py_ssize_t j, const double[::1] f) noexcept nogil:
    cdef Py_ssize_t i, n = L.shape[0]
    cdef double mx = -INFINITY, s = 0.0, t
    for i in range(n):
        t = L[i, j] + f[i]
        if t > mx:
            mx = t
    for i in range(n):
        s += exp(L[i, j] + f[i] - mx)
    return mx + log(s)


def log_sinkhorn(const double[:, ::1] L, const double[::1] loga, const double[::1] logb,
                 double[::1] f, double[::1] g, double tol, long max_iter):
    cdef Py_ssize_t n = L.shape[0], m = L.shape[1], i, j
    cdef double err = INFINITY, s, d
    cdef long it = 0
    with nogil:
        while True:
            err = 0.0
            for i in range(n):
                s = 0.0
                for j in range(m):
                    s += exp(L[i, j] + f[i] + g[j])
                d = fabs(s - exp(loga[i]))
                if d > err:
                    err = d
            if err <= tol or it >= max_iter:
                break
            for i in range(n):
                f[i] = loga[i] - _lse_row(L, i, g)
            for j in range(m):
                g[j] = logb[j] - _lse_col(L, j, f)
            it += 1
    return it, err


def pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col):
    cdef Py_ssize_t r = T.shape[0], c = T.shape[1], i, j
    cdef double p = T[row, col], fac
    with nogil:
        for j in range(c):
            T[row, j] = T[row, j] / p
        for i in range(r):
            if i == row:
                continue
            fac = T[i, col]
            if fac != 0.0:
                for j in range(c):
                    T[i, j] -= fac * T[row, j]
                T[i, col] = 0.0
        T[row, col] = 1.0


def ratio_test(const double[:, ::1] T, Py_ssize_t col, const long[::1] basis,
               Py_ssize_t n_rows, double tol):
    cdef Py_ssize_t i, best_row = -1, last = T.shape[1] - 1
    cdef double best = INFINITY, ratio, slack
    # first pass: minimum ratio; second pass: Bland tie-break on basis index
    for i in range(n_rows):
        if T[i, col] > tol:
            ratio = T[i, last] / T[i, col]
            if ratio < best:
                best = ratio
    if best == INFINITY:
        return -1
    slack = 1e-12 * (fabs(best) if fabs(best) > 1.0 else 1.0)
    for i in range(n_rows):
        if T[i, col] > tol:
            ratio = T[i, last] / T[i, col]
            if ratio <= best + slack:
                if best_row < 0 or basis[i] < basis[best_row]:
                    best_row = i
    return best_row
