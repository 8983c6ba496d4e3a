# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``; same signatures."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, M_PI

cnp.import_array()


def legendre_table(int lmax, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t nx = xv.shape[0]
    P_arr = np.zeros((lmax + 1, lmax + 1, nx))
    dP_arr = np.zeros((lmax + 1, lmax + 1, nx))
    cdef double[:, :, ::1] P = P_arr
    cdef double[:, :, ::1] dP = dP_arr
    cdef Py_ssize_t i
    cdef int l, m
    cdef double xi, si, a, b, c, pmm, p1, p2, p0
    for i in range(nx):
        xi = xv[i]
        si = sqrt(1.0 - xi * xi)
        pmm = 1.0 / sqrt(4.0 * M_PI)
        for m in range(lmax + 1):
            if m > 0:
                pmm = sqrt((2.0 * m + 1.0) / (2.0 * m)) * si * pmm
            P[m, m, i] = pmm
            if m < lmax:
                P[m + 1, m, i] = sqrt(2.0 * m + 3.0) * xi * pmm
            for l in range(m + 2, lmax + 1):
                a = sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0))
                P[l, m, i] = a * (xi * P[l - 1, m, i] - b * P[l - 2, m, i])
            dP[m, m, i] = m * xi * P[m, m, i] / si
            for l in range(m + 1, lmax + 1):
                c = sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (l * l - m * m))
                dP[l, m, i] = (l * xi * P[l, m, i] - c * P[l - 1, m, i]) / si
    return P_arr, dP_arr


def jet_algebra(value, hess):
    cdef double[::1] v = np.ascontiguousarray(value, dtype=np.float64)
    cdef double[:, :, ::1] H = np.ascontiguousarray(hess, dtype=np.float64)
    cdef Py_ssize_t N = H.shape[0]
    cdef Py_ssize_t n = H.shape[1]
    W_arr = np.empty((N, n, n))
    U_arr = np.empty((N, n, n))
    det_arr = np.empty(N)
    mn_arr = np.empty(N)
    cdef double[:, :, ::1] W = W_arr
    cdef double[:, :, ::1] U = U_arr
    cdef double[::1] det = det_arr
    cdef double[::1] mn = mn_arr
    cdef Py_ssize_t q
    cdef double a, b, c, d
    if n == 1:
        for q in range(N):
            a = H[q, 0, 0] + v[q]
            W[q, 0, 0] = a
            U[q, 0, 0] = 1.0
            det[q] = a
            mn[q] = a
        return W_arr, det_arr, U_arr, mn_arr
    for q in range(N):
        a = H[q, 0, 0] + v[q]
        c = H[q, 1, 1] + v[q]
        b = 0.5 * (H[q, 0, 1] + H[q, 1, 0])
        W[q, 0, 0] = a
        W[q, 1, 1] = c
        W[q, 0, 1] = H[q, 0, 1]
        W[q, 1, 0] = H[q, 1, 0]
        det[q] = a * c - b * b
        U[q, 0, 0] = c
        U[q, 1, 1] = a
        U[q, 0, 1] = -b
        U[q, 1, 0] = -b
        d = sqrt(0.25 * (a - c) * (a - c) + b * b)
        mn[q] = 0.5 * (a + c) - d
    return W_arr, det_arr, U_arr, mn_arr


def support_max(directions, vertices):
    cdef double[:, ::1] D = np.ascontiguousarray(directions, dtype=np.float64)
    cdef double[:, ::1] V = np.ascontiguousarray(vertices, dtype=np.float64)
    cdef Py_ssize_t N = D.shape[0]
    cdef Py_ssize_t M = V.shape[0]
    cdef Py_ssize_t d = D.shape[1]
    out_arr = np.empty(N)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double best, s
    for i in range(N):
        best = -1e300
        for j in range(M):
            s = 0.0
            for k in range(d):
                s += D[i, k] * V[j, k]
            if s > best:
                best = s
        out[i] = best
    return out_arr
