"""High-fidelity solves used for snapshot generation and error equations."""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from .grid import ParametricProblem
from .multigrid import mg_context_for, mgcg_solve


class HighFidelitySolver:
    """Per-parameter solver with cached factorizations.

    ``method="lu"`` factors A_h(mu) once per parameter (cheap at desk scale,
    and error-equation training reuses the factor for many right-hand
    sides); ``method="mgcg"`` runs tightly-converged MGCG instead.
    """

    def __init__(self, problem: ParametricProblem, method: str = "lu",
                 delta: float = 1e-14, l_max: int = 100, nu: int = 1,
                 smoother: str = "auto", max_cached: int = 128):
        if method not in ("lu", "mgcg"):
            raise ValueError(f"unknown high-fidelity method {method!r}")
        self.problem = problem
        self.method = method
        self.delta = delta
        self.l_max = l_max
        self.nu = nu
        self.smoother = smoother
        self.max_cached = max_cached
        self._cache: dict[bytes, object] = {}

    def _factor(self, mu):
        key = np.asarray(mu, dtype=np.float64).tobytes()
        if key not in self._cache:
            if len(self._cache) >= self.max_cached:
                self._cache.pop(next(iter(self._cache)))
            A = self.problem.operator(mu)
            if self.method == "lu":
                self._cache[key] = spla.splu(A.tocsc())
            else:
                self._cache[key] = (A, mg_context_for(
                    self.problem, mu, nu=self.nu, smoother=self.smoother))
        return self._cache[key]

    def solve(self, mu, rhs=None) -> np.ndarray:
        """Solve A_h(mu) x = rhs (defaults to f_h(mu))."""
        if rhs is None:
            rhs = self.problem.rhs(mu)
        fac = self._factor(mu)
        if self.method == "lu":
            return fac.solve(np.asarray(rhs, dtype=np.float64))
        A, ctx = fac
        x, report = mgcg_solve(A, rhs, np.zeros_like(rhs), ctx,
                               delta=self.delta, l_max=self.l_max, mu=mu)
        return x

    def __call__(self, mu, rhs=None) -> np.ndarray:
        return self.solve(mu, rhs)
