"""Pure NumPy/SciPy relaxation sweeps, fallback for the compiled kernels.

A forward Gauss-Seidel sweep is algebraically ``x_new = (D+L)^{-1} (b - U x)``,
so the sequential update can be expressed as one sparse triangular solve.
The triangular splits are precomputed per matrix by the caller (see
``kernels.Smoother``) because building them dominates a single sweep.
"""

import numpy as np
from scipy.sparse.linalg import spsolve_triangular


def csr_gauss_seidel(data, indices, indptr, x, b, row_start, row_stop, row_step):
    # Slow reference path: plain Python loop, used only when the caller did
    # not go through Smoother (kept for parity with the compiled signature).
    for i in range(row_start, row_stop, row_step):
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        mask = cols != i
        diag = vals[~mask][0]
        x[i] = (b[i] - vals[mask] @ x[cols[mask]]) / diag


def csr_jacobi(data, indices, indptr, x, b, diag, scratch):
    scratch[:] = x
    for i in range(len(x)):
        lo, hi = indptr[i], indptr[i + 1]
        cols = indices[lo:hi]
        vals = data[lo:hi]
        mask = cols != i
        x[i] = (b[i] - vals[mask] @ scratch[cols[mask]]) / diag[i]


def gs_forward_vectorized(lower, upper, x, b):
    """x <- (D+L)^{-1} (b - U x); equals a sequential forward sweep."""
    x[:] = spsolve_triangular(lower, b - upper @ x, lower=True)


def gs_backward_vectorized(upper, lower, x, b):
    """x <- (D+U)^{-1} (b - L x); equals a sequential backward sweep."""
    x[:] = spsolve_triangular(upper, b - lower @ x, lower=False)


def jacobi_vectorized(A, diag, x, b):
    x += (b - A @ x) / diag
