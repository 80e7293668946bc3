"""Smoother kernels with backend selection.

The compiled extension (``rbws._smoothers``, Cython) is preferred; if it is
not built, or ``RBWS_KERNELS=numpy`` is set, the pure NumPy/SciPy fallback
is used. Both backends implement the same sweeps; they differ only in
floating-point summation order (agreement to round-off).
"""

from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

from . import _smoothers_np

_requested = os.environ.get("RBWS_KERNELS", "").lower()

if _requested in ("", "cython", "compiled"):
    try:
        from . import _smoothers as _compiled

        BACKEND = "cython"
    except ImportError:
        if _requested:
            raise
        _compiled = None
        BACKEND = "numpy"
elif _requested == "numpy":
    _compiled = None
    BACKEND = "numpy"
else:
    raise ValueError(f"unknown RBWS_KERNELS backend {_requested!r}")

SWEEP_KINDS = (
    "jacobi",
    "gauss-seidel-forward",
    "gauss-seidel-backward",
    "gauss-seidel-symmetric",
)


class Smoother:
    """Stationary point-smoother bound to one sparse SPD matrix.

    Precomputes whatever the active backend needs (CSR arrays with int32
    indices for the compiled kernels, triangular splits for the fallback).
    Instances are immutable and safe for concurrent read-only use.
    """

    def __init__(self, A, backend: str | None = None, omega: float = 1.0):
        A = sp.csr_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError("smoother requires a square matrix")
        self.n = A.shape[0]
        self.omega = float(omega)  # damping for Jacobi sweeps only
        self.diag = A.diagonal().copy()
        if np.any(self.diag == 0.0):
            raise ValueError("zero diagonal entry; point smoothing undefined")
        self.backend = backend or BACKEND
        if self.backend == "cython":
            self._data = np.ascontiguousarray(A.data, dtype=np.float64)
            self._indices = np.ascontiguousarray(A.indices, dtype=np.int32)
            self._indptr = np.ascontiguousarray(A.indptr, dtype=np.int32)
        elif self.backend == "numpy":
            self._A = A
            self._lower = sp.csr_matrix(sp.tril(A, k=0))
            self._strict_lower = sp.csr_matrix(sp.tril(A, k=-1))
            self._upper = sp.csr_matrix(sp.triu(A, k=0))
            self._strict_upper = sp.csr_matrix(sp.triu(A, k=1))
        else:
            raise ValueError(f"unknown backend {self.backend!r}")

    def sweep(self, u, b, kind: str, nu: int = 1):
        """Apply ``nu`` sweeps of the chosen kind starting from ``u``.

        Returns a new vector; ``u`` is not modified.
        """
        if kind not in SWEEP_KINDS:
            raise ValueError(f"unknown smoother kind {kind!r}")
        if nu < 0:
            raise ValueError("sweep count must be non-negative")
        x = np.array(u, dtype=np.float64, copy=True)
        b = np.asarray(b, dtype=np.float64)
        for _ in range(nu):
            if kind == "jacobi":
                self._jacobi(x, b)
            elif kind == "gauss-seidel-forward":
                self._gs(x, b, forward=True)
            elif kind == "gauss-seidel-backward":
                self._gs(x, b, forward=False)
            else:
                self._gs(x, b, forward=True)
                self._gs(x, b, forward=False)
        return x

    def _jacobi(self, x, b):
        if self.omega == 1.0:
            if self.backend == "cython":
                scratch = np.empty_like(x)
                _compiled.csr_jacobi(self._data, self._indices, self._indptr,
                                     x, b, self.diag, scratch)
            else:
                _smoothers_np.jacobi_vectorized(self._A, self.diag, x, b)
        else:
            if self.backend == "cython":
                old = x.copy()
                scratch = np.empty_like(x)
                _compiled.csr_jacobi(self._data, self._indices, self._indptr,
                                     x, b, self.diag, scratch)
                x *= self.omega
                x += (1.0 - self.omega) * old
            else:
                x += self.omega * (b - self._A @ x) / self.diag

    def _gs(self, x, b, forward: bool):
        if self.backend == "cython":
            if forward:
                _compiled.csr_gauss_seidel(self._data, self._indices, self._indptr,
                                           x, b, 0, self.n, 1)
            else:
                _compiled.csr_gauss_seidel(self._data, self._indices, self._indptr,
                                           x, b, self.n - 1, -1, -1)
        else:
            if forward:
                _smoothers_np.gs_forward_vectorized(self._lower, self._strict_upper, x, b)
            else:
                _smoothers_np.gs_backward_vectorized(self._upper, self._strict_lower, x, b)


def smooth(u, A, b, nu: int, kind: str):
    """Convenience one-shot smoother (builds a workspace per call)."""
    return Smoother(A).sweep(u, b, kind, nu)
