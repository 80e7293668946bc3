"""Multispace reduced-basis preconditioning.

The preconditioner combines one fine smoothing sweep with a reduced Galerkin
correction whose basis depends on the iteration index: the k-th basis is
trained from solutions of the k-th error equation A e = r collected while
simulating the preconditioned iteration over the training set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kernels import Smoother
from .krylov import pcg_solve
from .rb import PodBasis, pod_build, rbm_pod_solve

FINE_SMOOTH = "gauss-seidel-symmetric"  # one sweep inside the preconditioner


@dataclass(frozen=True)
class MsrbHierarchy:
    """Initial POD space plus one error-snapshot basis per iteration index."""

    init_basis: PodBasis
    bases: tuple  # np.ndarray per k, trained from the k-th error equation
    N: int
    K_max: int
    spectra: tuple = ()  # per-k POD eigenvalues of the error snapshots

    def basis_for(self, k: int) -> np.ndarray:
        """Basis for PCG iteration index k; the last one is reused beyond K_max."""
        if not self.bases:
            return np.zeros((self.init_basis.basis.shape[0], 0))
        return self.bases[min(k, len(self.bases) - 1)]


def msrb_apply(b, A, W, smoother: Smoother | None = None) -> np.ndarray:
    """One fine smoothing sweep from zero plus reduced correction of its residual."""
    b = np.asarray(b, dtype=np.float64)
    if smoother is None:
        smoother = Smoother(A)
    u = smoother.sweep(np.zeros_like(b), b, FINE_SMOOTH, 1)
    W = np.asarray(W)
    if W.shape[1] == 0:
        return u
    r = b - A @ u
    return u + rbm_pod_solve(A, r, W)


class MsrbPreconditioner:
    """Iteration-indexed preconditioner bound to one operator.

    Caches the smoother workspace and the projected reduced operators per
    basis so repeated applications cost one sweep plus small dense solves.
    """

    def __init__(self, A, hier: MsrbHierarchy):
        self.A = A
        self.hier = hier
        self.smoother = Smoother(A)
        self._reduced: dict[int, tuple] = {}

    def _reduced_for(self, k: int):
        idx = min(k, len(self.hier.bases) - 1) if self.hier.bases else -1
        if idx not in self._reduced:
            W = self.hier.basis_for(k)
            if W.shape[1] == 0:
                self._reduced[idx] = None
            else:
                AW = np.asarray(self.A @ W)
                A_N = W.T @ AW
                self._reduced[idx] = (W, sla.cho_factor(A_N))
        return self._reduced[idx]

    def __call__(self, r, k: int) -> np.ndarray:
        u = self.smoother.sweep(np.zeros_like(r), r, FINE_SMOOTH, 1)
        red = self._reduced_for(k)
        if red is None:
            return u
        W, factor = red
        res = r - self.A @ u
        return u + W @ sla.cho_solve(factor, W.T @ res)


class _PcgState:
    """One PCG iteration at a time, with externally supplied preconditioning."""

    def __init__(self, A, f, x0):
        self.A = A
        self.f = f
        self.x = np.array(x0, dtype=np.float64, copy=True)
        self.r = f - A @ self.x
        self.p = None
        self.rs = None

    def advance(self, s):
        """Consume s = P(r) and perform one CG update."""
        rs_new = float(self.r @ s)
        if self.p is None:
            self.p = s
        else:
            self.p = s + (rs_new / self.rs) * self.p
        self.rs = rs_new
        Ap = self.A @ self.p
        alpha = self.rs / float(self.p @ Ap)
        self.x += alpha * self.p
        self.r -= alpha * Ap


def msrb_train(mus, N: int, K_max: int, hf_solver, operator, rhs) -> MsrbHierarchy:
    """Train the per-iteration error-snapshot bases.

    Simulates the reduced-initialized, MSRB-preconditioned CG iteration over
    the whole training set; at each iteration index the residuals across
    parameters are turned into error snapshots via ``hf_solver(mu, r)`` and
    compressed with POD. Serial across k by construction.
    """
    if K_max < 0:
        raise ValueError("K_max must be non-negative")
    mus = [np.asarray(m, dtype=np.float64) for m in mus]
    snapshots = [hf_solver(m) for m in mus]
    init = pod_build(snapshots, N)
    if K_max == 0:
        return MsrbHierarchy(init_basis=init, bases=(), N=N, K_max=0)

    systems = [(operator(m), rhs(m)) for m in mus]
    smoothers = [Smoother(A) for A, _ in systems]
    states = []
    for (A, f), _m in zip(systems, mus):
        u0 = rbm_pod_solve(A, f, init.basis)
        states.append(_PcgState(A, f, u0))

    bases = []
    spectra = []
    for k in range(K_max):
        errors = [hf_solver(m, st.r) for m, st in zip(mus, states)]
        pod_k = pod_build(errors, N)
        bases.append(pod_k.basis)
        spectra.append(pod_k.eigenvalues)
        for (A, _f), sm, st in zip(systems, smoothers, states):
            s = msrb_apply(st.r, A, pod_k.basis, smoother=sm)
            st.advance(s)
    return MsrbHierarchy(
        init_basis=init, bases=tuple(bases), N=N, K_max=K_max,
        spectra=tuple(np.asarray(s) for s in spectra),
    )


def msrbcg_solve(A, f, x0, hier: MsrbHierarchy, delta: float = 1e-16,
                 l_max: int = 40, mu=None, method: str = "msrbcg",
                 residual_log: list | None = None):
    """PCG with the iteration-indexed MSRB preconditioner.

    ``residual_log``, when given, collects the true residual vector
    f - A x implied by each preconditioned iterate (for spectrum studies).
    """
    precond = MsrbPreconditioner(A, hier)

    if residual_log is None:
        wrapped = precond
    else:
        def wrapped(r, k):
            residual_log.append(r.copy())
            return precond(r, k)

    return pcg_solve(A, f, x0, precond=wrapped, delta=delta, l_max=l_max,
                     method=method, mu=mu)


def msrb_richardson(A, f, hier: MsrbHierarchy, delta: float = 1e-16,
                    l_max: int = 40, mu=None, record_half_residuals: bool = False):
    """Reduced-initialized Richardson iteration with the MSRB correction.

    Each step smooths once against the current residual, then corrects the
    half-step residual in the k-th reduced space. Returns
    ``(x, history, half_residuals)`` where history holds relative residual
    norms (recomputed, not recurrences).
    """
    f = np.asarray(f, dtype=np.float64)
    fnorm = np.linalg.norm(f)
    scale = fnorm if fnorm > 0 else 1.0
    smoother = Smoother(A)
    x = rbm_pod_solve(A, f, hier.init_basis.basis)
    r = f - A @ x
    history = [float(np.linalg.norm(r) / scale)]
    halves = []
    k = 0
    while history[-1] > delta and k < l_max:
        x = x + smoother.sweep(np.zeros_like(f), r, FINE_SMOOTH, 1)
        r_half = f - A @ x
        if record_half_residuals:
            halves.append(r_half.copy())
        x = x + rbm_pod_solve(A, r_half, hier.basis_for(k))
        r = f - A @ x
        history.append(float(np.linalg.norm(r) / scale))
        k += 1
    return x, history, halves
