# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def contour_sum_diag(const double complex[:, ::1] eigs,
                     const double complex[::1] nodes,
                     const double complex[::1] coeffs):
    cdef Py_ssize_t n_rows = eigs.shape[0]
    cdef Py_ssize_t n_cols = eigs.shape[1]
    cdef Py_ssize_t n_nodes = nodes.shape[0]
    cdef Py_ssize_t p, k, j
    cdef double complex acc, d
    out = np.empty((n_rows, n_cols), dtype=np.complex128)
    cdef double complex[:, ::1] res = out
    for p in range(n_rows):
        for k in range(n_cols):
            d = eigs[p, k]
            acc = 0
            for j in range(n_nodes):
                acc = acc + coeffs[j] / (d - nodes[j])
            res[p, k] = acc
    return out


def linear_recurrence(const double complex[:, ::1] factors,
                      const double complex[:, ::1] increments,
                      const double complex[::1] v0):
    cdef Py_ssize_t n_steps = factors.shape[0]
    cdef Py_ssize_t n_modes = factors.shape[1]
    cdef Py_ssize_t n, k
    out = np.empty((n_steps + 1, n_modes), dtype=np.complex128)
    cdef double complex[:, ::1] traj = out
    for k in range(n_modes):
        traj[0, k] = v0[k]
    for n in range(n_steps):
        for k in range(n_modes):
            traj[n + 1, k] = factors[n, k] * traj[n, k] + increments[n, k]
    return out


def weighted_sq_sum(const double[::1] point_weights,
                    const double complex[:, :, ::1] field,
                    const double[:, ::1] row_weights):
    cdef Py_ssize_t n_pts = field.shape[0]
    cdef Py_ssize_t n_rows = field.shape[1]
    cdef Py_ssize_t n_cols = field.shape[2]
    cdef Py_ssize_t p, i, j
    cdef double total = 0.0, inner, re, im
    for p in range(n_pts):
        inner = 0.0
        for i in range(n_rows):
            for j in range(n_cols):
                re = field[p, i, j].real
                im = field[p, i, j].imag
                inner += row_weights[p, i] * (re * re + im * im)
        total += point_weights[p] * inner
    return total
