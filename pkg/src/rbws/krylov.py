"""Conjugate gradient with pluggable, iteration-indexed preconditioners.

A preconditioner is any callable ``(residual, k) -> corrected`` where ``k``
is the CG iteration index; ``None`` means identity. The recurrence residual
drives the loop; the reported final residual is recomputed as ``f - A x`` to
guard against drift, and the converged flag is based on that true residual.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .kernels import smooth  # re-exported; smoothers live with the kernels

__all__ = ["SolveReport", "OperatorError", "pcg_solve", "cg_solve", "smooth"]


class OperatorError(Exception):
    """The operator violated the SPD contract (breakdown, zero diagonal...)."""


@dataclass
class SolveReport:
    """Convergence record of one iterative solve."""

    method: str
    iterations: int
    history: list[float]  # relative recurrence residuals, length iterations+1
    converged: bool
    true_residual: float  # recomputed ||f - A x|| / ||f|| at exit
    wall_time: float
    delta: float
    l_max: int
    mu: np.ndarray | None = None
    absolute_norms: bool = False  # set when ||f|| = 0
    config: dict = field(default_factory=dict)


def pcg_solve(A, f, x0, precond=None, delta: float = 1e-16, l_max: int = 40,
              method: str = "pcg", mu=None):
    """Preconditioned conjugate gradient for SPD ``A``.

    Returns ``(x, SolveReport)``. Iterates while the recurrence residual
    satisfies ``||r||/||f|| > delta`` and ``k < l_max``.
    """
    if delta <= 0:
        raise ValueError("tolerance must be positive")
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    t0 = time.perf_counter()
    f = np.asarray(f, dtype=np.float64)
    x = np.array(x0, dtype=np.float64, copy=True)
    fnorm = np.linalg.norm(f)
    absolute = fnorm == 0.0
    scale = 1.0 if absolute else fnorm

    def apply_p(r, k):
        if precond is None:
            return r.copy()
        s = precond(r, k)
        # guard against preconditioners returning their input: p must not
        # alias r, which is updated in place
        return s.copy() if s is r else s

    r = f - A @ x
    history = [float(np.linalg.norm(r) / scale)]
    k = 0
    if history[0] > delta and l_max > 0:
        s = apply_p(r, 0)
        p = s
        rs = float(r @ s)
        while k < l_max:
            Ap = A @ p
            pAp = float(p @ Ap)
            if pAp <= 0.0:
                raise OperatorError(
                    f"non-positive curvature p.A.p = {pAp:g}; operator not SPD"
                )
            alpha = rs / pAp
            x += alpha * p
            r -= alpha * Ap
            k += 1
            relres = float(np.linalg.norm(r) / scale)
            history.append(relres)
            if relres <= delta:
                break
            s = apply_p(r, k)
            rs_new = float(r @ s)
            beta = rs_new / rs
            p = s + beta * p
            rs = rs_new

    true_res = float(np.linalg.norm(f - A @ x) / scale)
    report = SolveReport(
        method=method,
        iterations=k,
        history=history,
        converged=true_res <= delta,
        true_residual=true_res,
        wall_time=time.perf_counter() - t0,
        delta=delta,
        l_max=l_max,
        mu=None if mu is None else np.asarray(mu, dtype=np.float64),
        absolute_norms=absolute,
    )
    return x, report


def cg_solve(A, f, x0, delta: float = 1e-16, l_max: int = 40, mu=None):
    """Plain CG: PCG with the identity preconditioner."""
    return pcg_solve(A, f, x0, None, delta, l_max, method="cg", mu=mu)
