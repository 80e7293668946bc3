"""Reduced-basis machinery: POD, DEIM point selection, the L1 coefficient
indicator, and the sub-sampled least-squares reduced solver with its greedy
offline loop (solution and residual collocation points, M = 2N-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "PodBasis",
    "L1rocModel",
    "DegenerateBasisError",
    "pod_build",
    "rbm_pod_solve",
    "deim_extend",
    "l1_indicator",
    "l1roc_offline",
    "l1roc_online",
]


class DegenerateBasisError(Exception):
    """A snapshot or reduced operator was numerically dependent/singular."""


@dataclass(frozen=True)
class PodBasis:
    """Orthonormal basis from the method of snapshots."""

    basis: np.ndarray  # (n_h, N), orthonormal columns
    eigenvalues: np.ndarray  # all correlation eigenvalues, non-increasing
    n_snapshots: int

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def pod_build(snapshots: Sequence[np.ndarray], N: int) -> PodBasis:
    """Eigen-decompose the snapshot correlation matrix and lift to state space.

    ``N`` is truncated to the numerical rank of the snapshot set. The span is
    re-orthonormalized with a QR pass to push W^T W = I to round-off.
    """
    if len(snapshots) == 0:
        raise ValueError("need at least one snapshot")
    S = np.column_stack([np.asarray(s, dtype=np.float64) for s in snapshots])
    n_s = S.shape[1]
    C = S.T @ S
    w, V = np.linalg.eigh(C)
    w = w[::-1].copy()
    V = V[:, ::-1]
    w[w < 0.0] = 0.0
    rank = int(np.sum(w > 1e-14 * max(w[0], 1e-300)))
    N_eff = min(N, rank)
    if N_eff == 0:
        return PodBasis(basis=np.zeros((S.shape[0], 0)), eigenvalues=w, n_snapshots=n_s)
    W = S @ (V[:, :N_eff] / np.sqrt(w[:N_eff]))
    Q, R = np.linalg.qr(W)
    # keep the eigenvector orientation deterministic
    Q = Q * np.sign(np.diag(R))
    return PodBasis(basis=Q, eigenvalues=w, n_snapshots=n_s)


def rbm_pod_solve(A, b, W) -> np.ndarray:
    """Galerkin reduced solve: W (W^T A W)^{-1} W^T b."""
    W = np.asarray(W)
    if W.shape[1] == 0:
        return np.zeros(W.shape[0])
    b = np.asarray(b, dtype=np.float64)
    AW = A @ W
    A_N = W.T @ AW
    b_N = W.T @ b
    try:
        u_N = sla.solve(A_N, b_N, assume_a="sym")
    except sla.LinAlgError as exc:
        raise DegenerateBasisError(f"reduced operator singular: {exc}") from exc
    if not np.all(np.isfinite(u_N)):
        raise DegenerateBasisError("reduced operator singular (non-finite solve)")
    return W @ u_N


class DeimStep(NamedTuple):
    column: np.ndarray  # new basis vector, unit at its interpolation point
    index: int  # new interpolation point
    coeffs: np.ndarray  # interpolation coefficients of v in the old basis
    pivot: float  # residual value at the new point


def deim_extend(W, X, v, exclude=None) -> DeimStep:
    """Extend an interpolatory basis by one vector.

    Interpolates ``v`` through the current basis at the points ``X``, takes
    the residual's largest entry as the new point (indices in ``exclude``
    are skipped), and normalizes the residual to one there. With an empty
    basis the residual is ``v`` itself.
    """
    v = np.asarray(v, dtype=np.float64)
    W = np.zeros((len(v), 0)) if W is None else np.asarray(W)
    X = list(X)
    if W.shape[1] != len(X):
        raise ValueError("basis width and point count differ")
    if W.shape[1] == 0:
        coeffs = np.zeros(0)
        rho = v.copy()
    else:
        coeffs = np.linalg.solve(W[X, :], v[X])
        rho = v - W @ coeffs
    vmax = np.max(np.abs(v))
    if np.max(np.abs(rho)) <= 1e-14 * max(vmax, 1e-300):
        raise DegenerateBasisError("snapshot numerically inside the current basis")
    mag = np.abs(rho)
    if exclude:
        mag = mag.copy()
        mag[list(exclude)] = -1.0
    index = int(np.argmax(mag))
    pivot = rho[index]
    if pivot == 0.0:
        raise DegenerateBasisError("residual vanishes at all admissible points")
    return DeimStep(column=rho / pivot, index=index, coeffs=coeffs, pivot=pivot)


def l1_indicator(c) -> float:
    """l1 norm of the reduced coefficients in snapshot coordinates."""
    return float(np.sum(np.abs(np.asarray(c))))


@dataclass(frozen=True)
class L1rocModel:
    """Trained over-collocation reduced model.

    ``transform`` is the upper-triangular change of basis accumulated during
    the DEIM extensions: raw snapshots satisfy U_N = W_N @ transform, so
    snapshot coordinates are ``solve(transform, orthogonal-coordinates)``.
    ``collocation`` interleaves solution and residual points in greedy order,
    which makes every prefix of length 2N'-1 a valid smaller model.
    """

    basis: np.ndarray  # (n_h, N)
    transform: np.ndarray  # (N, N), upper triangular
    collocation: np.ndarray  # (2N-1,) interleaved point indices
    solution_points: np.ndarray  # (N,)
    residual_points: np.ndarray  # (N-1,)
    chosen_mus: np.ndarray  # (N, p)
    indicator_history: np.ndarray  # max training indicator per greedy step
    saturated: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def n_points(self) -> int:
        return len(self.collocation)

    def prefix(self, N: int) -> "L1rocModel":
        """The nested model of smaller dimension N."""
        if not 1 <= N <= self.dim:
            raise ValueError(f"prefix dimension {N} outside [1, {self.dim}]")
        return L1rocModel(
            basis=self.basis[:, :N],
            transform=self.transform[:N, :N],
            collocation=self.collocation[: 2 * N - 1],
            solution_points=self.solution_points[:N],
            residual_points=self.residual_points[: N - 1],
            chosen_mus=self.chosen_mus[:N],
            indicator_history=self.indicator_history[:N],
            saturated=self.saturated,
        )


def _snapshot_coords(model: L1rocModel, a: np.ndarray) -> np.ndarray:
    return sla.solve_triangular(model.transform, a, lower=False)


def _online_coeffs(B: np.ndarray, b_s: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of the M x N sub-sampled system."""
    a, _, rank, _ = np.linalg.lstsq(B, b_s, rcond=None)
    if rank < B.shape[1]:
        raise DegenerateBasisError("sub-sampled reduced system is rank deficient")
    return a


def l1roc_online(model: L1rocModel, A, b):
    """Sub-sampled least-squares reduced solve.

    ``A`` may be the assembled sparse operator or a callable
    ``rows -> (len(rows), n_h) matrix`` yielding operator rows.
    Returns ``(solution vector, snapshot-coordinate vector)``.
    """
    if model.dim == 0:
        raise ValueError("empty model")
    rows = model.collocation
    R = A(rows) if callable(A) else A[rows, :]
    B = R @ model.basis
    B = np.asarray(B)
    b = np.asarray(b, dtype=np.float64)
    a = _online_coeffs(B, b[rows])
    return model.basis @ a, _snapshot_coords(model, a)


def l1roc_offline(
    mus: Sequence[np.ndarray],
    N: int,
    hf_solve: Callable[[np.ndarray], np.ndarray],
    operator: Callable[[np.ndarray], object],
    operator_rows: Callable[[np.ndarray, Sequence[int]], object],
    rhs: Callable[[np.ndarray], np.ndarray],
    seed: int = 0,
) -> L1rocModel:
    """Greedy offline training of the over-collocation model.

    Snapshot selection maximizes the L1 indicator of the online coefficients
    over the training set; solution and residual snapshots are folded into
    the collocation set by DEIM. Deterministic given (``mus`` order, seed).
    """
    mus = [np.asarray(m, dtype=np.float64) for m in mus]
    if not 1 <= N <= len(mus):
        raise ValueError("need 1 <= N <= number of training parameters")
    rng = np.random.default_rng(seed)
    first = int(rng.integers(len(mus)))

    rhss = [rhs(m) for m in mus]
    n_h = len(rhss[0])

    u1 = hf_solve(mus[first])
    step = deim_extend(None, [], u1)
    W = step.column[:, None]
    T = np.array([[step.pivot]])
    xs = [step.index]
    xr: list[int] = []
    x_interleaved = [step.index]
    chosen = [first]
    res_basis = np.zeros((n_h, 0))
    history = [l1_indicator([1.0])]
    saturated = False

    # sampled operator rows per training parameter, grown two rows per step
    sampled = [operator_rows(m, x_interleaved) for m in mus]

    for n in range(2, N + 1):
        taken = set(xs) | set(xr)
        indicators = np.empty(len(mus))
        coeffs_by_mu = []
        for j, m in enumerate(mus):
            B = np.asarray(sampled[j] @ W)
            a = _online_coeffs(B, rhss[j][x_interleaved])
            coeffs_by_mu.append(a)
            indicators[j] = l1_indicator(sla.solve_triangular(T, a, lower=False))
        pick = int(np.argmax(indicators))
        history.append(float(indicators[pick]))
        if pick in chosen:
            saturated = True
            break
        chosen.append(pick)

        u = hf_solve(mus[pick])
        step = deim_extend(W, xs, u, exclude=taken)
        taken.add(step.index)
        T = np.block([
            [T, step.coeffs[:, None]],
            [np.zeros((1, T.shape[1])), np.array([[step.pivot]])],
        ])
        W = np.column_stack([W, step.column])
        xs.append(step.index)

        A_pick = operator(mus[pick])
        r = rhss[pick] - A_pick @ (W[:, :-1] @ coeffs_by_mu[pick])
        rstep = deim_extend(res_basis, xr, r, exclude=taken)
        res_basis = np.column_stack([res_basis, rstep.column])
        xr.append(rstep.index)

        x_interleaved.extend([step.index, rstep.index])
        for j, m in enumerate(mus):
            new_rows = operator_rows(m, x_interleaved[-2:])
            sampled[j] = sp.vstack([sampled[j], new_rows]).tocsr()

    return L1rocModel(
        basis=W,
        transform=T,
        collocation=np.asarray(x_interleaved, dtype=np.int64),
        solution_points=np.asarray(xs, dtype=np.int64),
        residual_points=np.asarray(xr, dtype=np.int64),
        chosen_mus=np.asarray([mus[i] for i in chosen]),
        indicator_history=np.asarray(history),
        saturated=saturated,
    )
