# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the alternating-minimization inner loop.

Same contracts as ``rdpf._pykernels``; the loops are written out so that
tiny alphabets do not pay NumPy's per-call overhead.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def tilt(const double[:, ::1] expo, const double[::1] u, const double[::1] p):
    cdef Py_ssize_t n = expo.shape[0], m = expo.shape[1], x, y
    cdef double shift, z, wxy
    Q_arr = np.empty((n, m), dtype=np.float64)
    c_arr = np.zeros(m, dtype=np.float64)
    lz_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] Q = Q_arr
    cdef double[::1] c = c_arr
    cdef double[::1] log_z = lz_arr
    cdef double[::1] a = np.empty(m, dtype=np.float64)
    for x in range(n):
        shift = expo[x, 0]
        for y in range(1, m):
            if expo[x, y] > shift:
                shift = expo[x, y]
        z = 0.0
        for y in range(m):
            a[y] = exp(expo[x, y] - shift)
            z += u[y] * a[y]
        log_z[x] = log(z) + shift
        for y in range(m):
            wxy = a[y] / z
            Q[x, y] = u[y] * wxy
            c[y] += p[x] * wxy
    return Q_arr, c_arr, lz_arr


def m_matrix(const double[:, ::1] expo, const double[::1] u, const double[::1] p):
    cdef Py_ssize_t n = expo.shape[0], m = expo.shape[1], x, i, j
    cdef double shift, z, px, pw
    M_arr = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] M = M_arr
    cdef double[::1] w = np.empty(m, dtype=np.float64)
    for x in range(n):
        px = p[x]
        if px == 0.0:
            continue
        shift = expo[x, 0]
        for i in range(1, m):
            if expo[x, i] > shift:
                shift = expo[x, i]
        z = 0.0
        for i in range(m):
            w[i] = exp(expo[x, i] - shift)
            z += u[i] * w[i]
        for i in range(m):
            w[i] /= z
        # symmetric before the u(i) scaling: fill the upper triangle only
        for i in range(m):
            pw = px * w[i]
            for j in range(i, m):
                M[i, j] += pw * w[j]
    for i in range(m):
        for j in range(i + 1, m):
            M[j, i] = M[i, j] * u[j]
            M[i, j] *= u[i]
        M[i, i] *= u[i]
    return M_arr
