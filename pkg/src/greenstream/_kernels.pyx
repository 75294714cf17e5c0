# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simplex kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY, isfinite

cnp.import_array()

DEF BASIC = 0
DEF AT_LOWER = 1
DEF AT_UPPER = 2


def pivot(double[:, ::1] T, Py_ssize_t row, Py_ssize_t col):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1]
    cdef Py_ssize_t i, k, jj, nnz = 0
    cdef double inv = 1.0 / T[row, col]
    cdef double f
    cdef cnp.ndarray[cnp.intp_t, ndim=1] idx = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] nzc = idx
    cdef double[::1] prow = T[row]

    for k in range(n):
        if prow[k] != 0.0:
            prow[k] *= inv
            nzc[nnz] = k
            nnz += 1
    prow[col] = 1.0

    with nogil:
        for i in range(m):
            if i == row:
                continue
            f = T[i, col]
            if f == 0.0:
                continue
            for jj in range(nnz):
                k = nzc[jj]
                T[i, k] -= f * prow[k]
            T[i, col] = 0.0


def price(double[::1] d, signed char[::1] status, unsigned char[::1] eligible,
          double tol, bint bland):
    cdef Py_ssize_t n = d.shape[0], j, best = -1
    cdef double v, bestv = tol
    for j in range(n):
        if not eligible[j]:
            continue
        if status[j] == AT_LOWER:
            v = -d[j]
        elif status[j] == AT_UPPER:
            v = d[j]
        else:
            continue
        if v > tol:
            if bland:
                return j
            if v > bestv:
                bestv = v
                best = j
    return best


def ratio_test(alpha, double[::1] beta, double[::1] ub_basic, cnp.intp_t[::1] basis,
               double delta, double tol, bint bland):
    cdef double[:] al = alpha
    cdef Py_ssize_t m = beta.shape[0], i, row = -1
    cdef double a, th, tmin = INFINITY, slack, best_abs = -1.0
    cdef cnp.intp_t best_basis = 0

    for i in range(m):
        a = delta * al[i]
        if a > tol:
            th = beta[i] / a
        elif a < -tol and isfinite(ub_basic[i]):
            th = (ub_basic[i] - beta[i]) / (-a)
        else:
            continue
        if th < 0.0:
            th = 0.0
        if th < tmin:
            tmin = th
    if not isfinite(tmin):
        return INFINITY, -1, False

    slack = tmin + 1e-12 * (1.0 + tmin)
    for i in range(m):
        a = delta * al[i]
        if a > tol:
            th = beta[i] / a
        elif a < -tol and isfinite(ub_basic[i]):
            th = (ub_basic[i] - beta[i]) / (-a)
        else:
            continue
        if th < 0.0:
            th = 0.0
        if th > slack:
            continue
        if bland:
            if row < 0 or basis[i] < best_basis:
                row = i
                best_basis = basis[i]
        elif fabs(a) > best_abs:
            best_abs = fabs(a)
            row = i
    a = delta * al[row]
    if a > tol:
        th = beta[row] / a
    else:
        th = (ub_basic[row] - beta[row]) / (-a)
    if th < 0.0:
        th = 0.0
    return th, row, a < 0
