"""Geometric multigrid V-cycle, used standalone and as the MGCG preconditioner.

Smoothing comes in symmetric pre/post pairs so one V-cycle is a symmetric
linear operator, as PCG requires:

* ``"gs"`` — forward Gauss-Seidel pre, backward Gauss-Seidel post;
* ``"jacobi"`` — damped Jacobi both sides (self-adjoint);
* ``"plane-z"`` — block Gauss-Seidel over z = const node planes with exact
  plane solves, ascending pre / descending post. This is the standard cure
  for the strong x-y / weak z coupling of the anisotropic example, where
  point smoothing stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import galerkin_coarsen
from .kernels import Smoother
from .krylov import OperatorError, pcg_solve

#: Jacobi damping used by the default isotropic smoother.
JACOBI_OMEGA = 0.7
#: Damping for the plane-Jacobi smoother of the anisotropic problem.
PLANE_OMEGA = 0.6


class PointSmootherPair:
    """Point-relaxation pre/post pair sharing one Smoother workspace."""

    def __init__(self, A, pre: str, post: str, omega: float = 1.0):
        self._s = Smoother(A, omega=omega)
        self.pre_kind = pre
        self.post_kind = post

    def presweep(self, u, b, nu):
        return self._s.sweep(u, b, self.pre_kind, nu)

    def postsweep(self, u, b, nu):
        return self._s.sweep(u, b, self.post_kind, nu)


class PlaneSmootherPair:
    """Block Gauss-Seidel over z-planes with factored plane blocks.

    ``layers[i]`` is the z-layer index of free DoF ``i``. Plane blocks are
    solved exactly (sparse LU); neighbour couplings reach only the adjacent
    layers for the hexahedral stencil.
    """

    def __init__(self, A, layers, omega: float = 1.0):
        A = sp.csr_matrix(A)
        self._A = A
        self.omega = float(omega)  # < 1 switches to damped plane-Jacobi
        layers = np.asarray(layers)
        if len(layers) != A.shape[0]:
            raise ValueError("layer map does not match operator size")
        zs = np.unique(layers)
        self._planes = [np.flatnonzero(layers == z) for z in zs]
        self._factors = []
        self._neighbors = []  # (A[plane, prev], A[plane, next])
        for p, idx in enumerate(self._planes):
            block = A[idx][:, idx].tocsc()
            self._factors.append(spla.splu(block))
            prev_idx = self._planes[p - 1] if p > 0 else None
            next_idx = self._planes[p + 1] if p + 1 < len(self._planes) else None
            self._neighbors.append(
                (
                    A[idx][:, prev_idx].tocsr() if prev_idx is not None else None,
                    A[idx][:, next_idx].tocsr() if next_idx is not None else None,
                )
            )

    def _sweep(self, x, b, order):
        for p in order:
            idx = self._planes[p]
            rhs = b[idx].copy()
            A_prev, A_next = self._neighbors[p]
            if A_prev is not None:
                rhs -= A_prev @ x[self._planes[p - 1]]
            if A_next is not None:
                rhs -= A_next @ x[self._planes[p + 1]]
            x[idx] = self._factors[p].solve(rhs)
        return x

    def _jacobi_sweep(self, x, b):
        r = b - self._A @ x
        for p, idx in enumerate(self._planes):
            x[idx] += self.omega * self._factors[p].solve(r[idx])
        return x

    def presweep(self, u, b, nu):
        x = np.array(u, dtype=np.float64, copy=True)
        for _ in range(nu):
            if self.omega == 1.0:
                self._sweep(x, b, range(len(self._planes)))
            else:
                self._jacobi_sweep(x, b)
        return x

    def postsweep(self, u, b, nu):
        x = np.array(u, dtype=np.float64, copy=True)
        for _ in range(nu):
            if self.omega == 1.0:
                self._sweep(x, b, range(len(self._planes) - 1, -1, -1))
            else:
                self._jacobi_sweep(x, b)
        return x


@dataclass(frozen=True)
class MgContext:
    """Per-parameter multigrid state: operators, smoothers, coarse factor."""

    operators: tuple  # csr per level, coarse (0) to fine (J)
    prolongations: tuple  # level i -> i+1 on free DoFs
    smoothers: tuple  # smoother pair per level (level 0 unused)
    nu: int
    coarse_factor: tuple  # scipy cho_factor of the level-0 operator
    smoother_kind: str = "gs"

    @property
    def levels(self) -> int:
        return len(self.operators)


def _make_smoothers(ops, kind: str, layers_by_level=None):
    pairs = []
    for i, A in enumerate(ops):
        if i == 0:
            pairs.append(None)  # coarsest level is solved directly
        elif kind == "gs":
            pairs.append(PointSmootherPair(A, "gauss-seidel-forward", "gauss-seidel-backward"))
        elif kind == "jacobi":
            pairs.append(PointSmootherPair(A, "jacobi", "jacobi", omega=JACOBI_OMEGA))
        elif kind == "plane-z":
            if layers_by_level is None:
                raise ValueError("plane-z smoothing needs per-level layer maps")
            pairs.append(PlaneSmootherPair(A, layers_by_level[i]))
        elif kind == "plane-jacobi":
            if layers_by_level is None:
                raise ValueError("plane smoothing needs per-level layer maps")
            pairs.append(PlaneSmootherPair(A, layers_by_level[i], omega=PLANE_OMEGA))
        else:
            raise ValueError(f"unknown smoother kind {kind!r}")
    return tuple(pairs)


def _finish_context(ops, prolongations, nu: int, smoother: str, layers_by_level=None) -> MgContext:
    if nu < 0:
        raise ValueError("smoothing count must be non-negative")
    try:
        coarse_factor = sla.cho_factor(ops[0].toarray())
    except sla.LinAlgError as exc:
        raise OperatorError(f"coarsest operator not SPD: {exc}") from exc
    return MgContext(
        operators=tuple(ops),
        prolongations=tuple(prolongations),
        smoothers=_make_smoothers(ops, smoother, layers_by_level),
        nu=nu,
        coarse_factor=coarse_factor,
        smoother_kind=smoother,
    )


def mg_build(A_fine, prolongations, nu: int = 2, smoother: str = "gs") -> MgContext:
    """Galerkin-coarsen A_fine down the hierarchy and factor the coarsest level."""
    A_fine = sp.csr_matrix(A_fine)
    if prolongations and A_fine.shape[0] != prolongations[-1].shape[0]:
        raise ValueError("fine operator size does not match the top prolongation")
    ops = [A_fine]
    for P in reversed(prolongations):
        ops.append(galerkin_coarsen(ops[-1], P))
    ops = ops[::-1]
    return _finish_context(ops, list(prolongations), nu, smoother)


def default_smoother(spec) -> str:
    """Plane smoothing for anisotropic problems, damped Jacobi otherwise."""
    for term in spec.diffusion_terms:
        if len(set(term.aniso)) > 1:
            return "plane-jacobi"
    return "jacobi"


def mg_context_for(problem, mu, nu: int = 1, smoother: str = "auto") -> MgContext:
    """Fast context build from a ParametricProblem's precoarsened affine terms."""
    if smoother == "auto":
        smoother = default_smoother(problem.spec)
    ops = [problem.operator(mu, level=i) for i in range(problem.mesh.levels)]
    layers = None
    if smoother in ("plane-z", "plane-jacobi"):
        layers = [
            free // (n + 1) ** 2
            for free, n in zip(problem.free_by_level, problem.mesh.cells)
        ]
    return _finish_context(ops, list(problem.prolongations), nu, smoother, layers)


def mg_vcycle(b, ctx: MgContext, level: int | None = None) -> np.ndarray:
    """One V-cycle for A^level u = b, starting from zero."""
    if level is None:
        level = ctx.levels - 1
    if not 0 <= level < ctx.levels:
        raise ValueError(f"level {level} outside hierarchy")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != ctx.operators[level].shape[0]:
        raise ValueError("right-hand side does not match level size")
    if level == 0:
        return sla.cho_solve(ctx.coarse_factor, b)
    A = ctx.operators[level]
    P = ctx.prolongations[level - 1]
    u = ctx.smoothers[level].presweep(np.zeros_like(b), b, ctx.nu)
    r = b - A @ u
    e = mg_vcycle(P.T @ r, ctx, level - 1)
    u = u + P @ e
    return ctx.smoothers[level].postsweep(u, b, ctx.nu)


def mgcg_solve(A, f, x0, ctx: MgContext, delta: float = 1e-16, l_max: int = 40,
               mu=None, method: str = "mgcg"):
    """PCG with one V-cycle per preconditioner application."""
    return pcg_solve(
        A, f, x0,
        precond=lambda r, k: mg_vcycle(r, ctx),
        delta=delta, l_max=l_max, method=method, mu=mu,
    )
