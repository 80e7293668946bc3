# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR relaxation sweeps.

These loops are inherently sequential (Gauss-Seidel updates in place) and
dominate multigrid runtime, hence the compiled implementation. A NumPy
fallback with identical semantics lives in ``_smoothers_np``.
"""

import numpy as np

cimport numpy as cnp


def csr_gauss_seidel(double[::1] data, int[::1] indices, int[::1] indptr,
                     double[::1] x, double[::1] b,
                     Py_ssize_t row_start, Py_ssize_t row_stop, Py_ssize_t row_step):
    """One in-place Gauss-Seidel sweep over rows [row_start, row_stop) with stride."""
    cdef Py_ssize_t i, jj
    cdef double rsum, diag
    for i in range(row_start, row_stop, row_step):
        rsum = 0.0
        diag = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            if indices[jj] == i:
                diag = data[jj]
            else:
                rsum += data[jj] * x[indices[jj]]
        x[i] = (b[i] - rsum) / diag


def csr_jacobi(double[::1] data, int[::1] indices, int[::1] indptr,
               double[::1] x, double[::1] b, double[::1] diag,
               double[::1] scratch):
    """One in-place Jacobi sweep; ``scratch`` holds the previous iterate."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, jj
    cdef double rsum
    for i in range(n):
        scratch[i] = x[i]
    for i in range(n):
        rsum = 0.0
        for jj in range(indptr[i], indptr[i + 1]):
            if indices[jj] != i:
                rsum += data[jj] * scratch[indices[jj]]
        x[i] = (b[i] - rsum) / diag[i]
