"""Aggregate metrics for solver sweeps: averaged residual curves, break-even
points, reduced-model accuracy curves, and residual-snapshot spectra.
"""

from __future__ import annotations

import math

import numpy as np

from .krylov import SolveReport
from .rb import L1rocModel, l1roc_online

INF = math.inf


def _extended(history, k: int) -> float:
    """history[k] with the final value carried forward past convergence."""
    return float(history[min(k, len(history) - 1)])


def average_residual(reports: list[SolveReport], k: int) -> float:
    """Mean relative residual at iteration k over a sweep.

    Histories shorter than k are extended by their last entry, so converged
    runs keep contributing their final residual.
    """
    if not reports:
        raise ValueError("need at least one report")
    return float(np.mean([_extended(r.history, k) for r in reports]))


def average_residual_curve(reports: list[SolveReport]) -> np.ndarray:
    """The full r_ave curve, one entry per iteration up to the longest run."""
    kmax = max(len(r.history) for r in reports)
    return np.array([average_residual(reports, k) for k in range(kmax)])


def break_even(t_off: float, t_on_base: float, t_on_rbws: float) -> float:
    """Number of online solves amortizing the offline cost.

    t_off / (t_on_base - t_on_rbws) when the warm-started solve is actually
    faster; math.inf otherwise (no amortization possible).
    """
    if min(t_off, t_on_base, t_on_rbws) < 0:
        raise ValueError("times must be non-negative")
    saving = t_on_base - t_on_rbws
    if saving <= 0:
        return INF
    return t_off / saving


def rb_accuracy_curve(model: L1rocModel, systems, N_values) -> list[tuple[int, float]]:
    """Max relative residual of reduced online solutions per basis dimension.

    ``systems`` is a list of (A, f) pairs over the test set. For each N the
    N-column nested prefix of ``model`` is evaluated; N = 0 uses the zero
    solution (r_0 = 1 by convention).
    """
    out = []
    for N in N_values:
        if N == 0:
            out.append((0, 1.0))
            continue
        m = model.prefix(N)
        worst = 0.0
        for A, f in systems:
            u, _ = l1roc_online(m, A, f)
            fnorm = np.linalg.norm(f)
            r = np.linalg.norm(f - A @ u) / (fnorm if fnorm > 0 else 1.0)
            worst = max(worst, float(r))
        out.append((N, worst))
    return out


def residual_spectrum(snapshots) -> tuple[np.ndarray, bool]:
    """Correlation eigenvalues of a snapshot collection, scaled to lambda_max.

    Returns (spectrum, degenerate). The spectrum is sorted descending with
    first entry exactly 1; an all-zero collection yields ([1.0], True).
    """
    S = np.column_stack([np.asarray(s, dtype=np.float64) for s in snapshots])
    C = S.T @ S
    w = np.linalg.eigvalsh(C)[::-1].copy()
    w[w < 0.0] = 0.0
    if w[0] == 0.0:
        return np.array([1.0]), True
    return w / w[0], False
