# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: pairwise distances and labeled row accumulation.

Semantics mirror aepl._pykernels exactly; see that module for contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_sqdist(x, c):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], d = xv.shape[1], k = cv.shape[0]
    out = np.empty((m, k), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(m):
        for j in range(k):
            acc = 0.0
            for t in range(d):
                diff = xv[i, t] - cv[j, t]
                acc += diff * diff
            ov[i, j] = acc
    return out


def pairwise_dot(x, c):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], d = xv.shape[1], k = cv.shape[0]
    out = np.empty((m, k), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(m):
        for j in range(k):
            acc = 0.0
            for t in range(d):
                acc += xv[i, t] * cv[j, t]
            ov[i, j] = acc
    return out


def sum_by_label(x, labels, Py_ssize_t k):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef long long[::1] lv = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t m = xv.shape[0], d = xv.shape[1]
    sums = np.zeros((k, d), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    cdef double[:, ::1] sv = sums
    cdef long long[::1] cv = counts
    cdef Py_ssize_t i, t
    cdef long long lab
    for i in range(m):
        lab = lv[i]
        for t in range(d):
            sv[lab, t] += xv[i, t]
        cv[lab] += 1
    return sums, counts
