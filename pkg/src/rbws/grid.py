"""Structured hexahedral grids on the unit cube: nested hierarchy, trilinear
prolongation, stiffness/load assembly, and the per-parameter system factory.

Nodes are numbered lexicographically with x fastest:
``node = ix + (n+1)*(iy + (n+1)*iz)`` on an n-cell-per-dimension grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .problems import ProblemSpec

# 2-point Gauss rule on [0,1]
_GPTS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GWTS = np.array([0.5, 0.5])


def _shape_data():
    """Trilinear shape values and reference gradients at the 8 Gauss points.

    Local node l = lx + 2*ly + 4*lz with offsets in {0,1}^3. Returns
    (vals[q, l], grads[q, axis, l]) for the 2x2x2 tensor rule, plus weights.
    """
    pts = []
    wts = []
    for gz in range(2):
        for gy in range(2):
            for gx in range(2):
                pts.append((_GPTS[gx], _GPTS[gy], _GPTS[gz]))
                wts.append(_GWTS[gx] * _GWTS[gy] * _GWTS[gz])
    pts = np.array(pts)
    wts = np.array(wts)

    def phi(t):
        return np.array([1.0 - t, t])

    def dphi(t):
        return np.array([-1.0, 1.0])

    vals = np.empty((8, 8))
    grads = np.empty((8, 3, 8))
    for q, (xi, eta, zeta) in enumerate(pts):
        px, py, pz = phi(xi), phi(eta), phi(zeta)
        dx, dy, dz = dphi(xi), dphi(eta), dphi(zeta)
        for l in range(8):
            lx, ly, lz = l & 1, (l >> 1) & 1, (l >> 2) & 1
            vals[q, l] = px[lx] * py[ly] * pz[lz]
            grads[q, 0, l] = dx[lx] * py[ly] * pz[lz]
            grads[q, 1, l] = px[lx] * dy[ly] * pz[lz]
            grads[q, 2, l] = px[lx] * py[ly] * dz[lz]
    return vals, grads, wts, pts


_SHAPE_VALS, _REF_GRADS, _QWTS, _QPTS = _shape_data()


def node_coords(n: int):
    """Flat (x, y, z) coordinate arrays for the (n+1)^3 nodes."""
    t = np.linspace(0.0, 1.0, n + 1)
    Z, Y, X = np.meshgrid(t, t, t, indexing="ij")
    return X.ravel(), Y.ravel(), Z.ravel()


def connectivity(n: int) -> np.ndarray:
    """(n^3, 8) array of global node ids per element, element x fastest."""
    e = np.arange(n)
    ez, ey, ex = np.meshgrid(e, e, e, indexing="ij")
    ex, ey, ez = ex.ravel(), ey.ravel(), ez.ravel()
    conn = np.empty((n**3, 8), dtype=np.int64)
    for l in range(8):
        lx, ly, lz = l & 1, (l >> 1) & 1, (l >> 2) & 1
        conn[:, l] = (ex + lx) + (n + 1) * ((ey + ly) + (n + 1) * (ez + lz))
    return conn


def quad_coords(n: int):
    """Physical coordinates of all quadrature points, shape (n^3, 8) each."""
    h = 1.0 / n
    e = np.arange(n)
    ez, ey, ex = np.meshgrid(e, e, e, indexing="ij")
    ex, ey, ez = ex.ravel(), ey.ravel(), ez.ravel()
    xq = (ex[:, None] + _QPTS[None, :, 0]) * h
    yq = (ey[:, None] + _QPTS[None, :, 1]) * h
    zq = (ez[:, None] + _QPTS[None, :, 2]) * h
    return xq, yq, zq


def assemble_stiffness_kernel(n: int, kernel, aniso=(1.0, 1.0, 1.0)) -> sp.csr_matrix:
    """Stiffness matrix of grad(v) . kappa(x) diag(aniso) grad(u) on all nodes."""
    h = 1.0 / n
    det = h**3
    # per-quad-point 8x8 contribution with physical gradients (ref grad / h)
    Kq = np.zeros((8, 8, 8))
    for q in range(8):
        for a in range(3):
            g = _REF_GRADS[q, a] / h
            Kq[q] += aniso[a] * np.outer(g, g)
        Kq[q] *= _QWTS[q] * det
    xq, yq, zq = quad_coords(n)
    kvals = kernel(xq, yq, zq)
    if np.isscalar(kvals):
        kvals = np.full(xq.shape, float(kvals))
    elem = np.einsum("eq,qij->eij", kvals, Kq)
    conn = connectivity(n)
    rows = np.repeat(conn, 8, axis=1).ravel()
    cols = np.tile(conn, (1, 8)).ravel()
    nn = (n + 1) ** 3
    A = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=(nn, nn))
    return A.tocsr()


def assemble_load(n: int, source, mu) -> np.ndarray:
    """Load vector of the source term over all nodes."""
    h = 1.0 / n
    det = h**3
    xq, yq, zq = quad_coords(n)
    fvals = source(xq, yq, zq, mu)
    if np.isscalar(fvals):
        fvals = np.full(xq.shape, float(fvals))
    elem = np.einsum("eq,q,ql->el", fvals, _QWTS * det, _SHAPE_VALS)
    conn = connectivity(n)
    out = np.zeros((n + 1) ** 3)
    np.add.at(out, conn.ravel(), elem.ravel())
    return out


def prolongation(nc: int) -> sp.csr_matrix:
    """Trilinear interpolation from an nc-cell grid to the 2*nc-cell grid."""
    nf = 2 * nc
    P1 = sp.lil_matrix((nf + 1, nc + 1))
    for i in range(nc + 1):
        P1[2 * i, i] = 1.0
    for i in range(nc):
        P1[2 * i + 1, i] = 0.5
        P1[2 * i + 1, i + 1] = 0.5
    P1 = P1.tocsr()
    return sp.kron(sp.kron(P1, P1), P1).tocsr()


@dataclass(frozen=True)
class MeshHierarchy:
    """Nested uniform grids with full-node trilinear prolongations."""

    cells: tuple[int, ...]  # cells per dimension, coarse to fine
    prolongations: tuple[sp.csr_matrix, ...]  # level i -> i+1 on all nodes

    @property
    def levels(self) -> int:
        return len(self.cells)

    @property
    def finest_cells(self) -> int:
        return self.cells[-1]

    def nodes(self, level: int) -> int:
        return (self.cells[level] + 1) ** 3


def build_hierarchy(levels: int, m0: int) -> MeshHierarchy:
    if levels < 2:
        raise ValueError("need at least 2 levels for coarse-grid correction")
    if m0 < 2:
        raise ValueError("base grid needs at least 2 cells per dimension")
    cells = tuple(m0 * 2**i for i in range(levels))
    prols = tuple(prolongation(c) for c in cells[:-1])
    return MeshHierarchy(cells=cells, prolongations=prols)


def galerkin_coarsen(A_fine, P) -> sp.csr_matrix:
    """Galerkin triple product P^T A P."""
    A_fine = sp.csr_matrix(A_fine)
    P = sp.csr_matrix(P)
    if A_fine.shape[1] != P.shape[0]:
        raise ValueError(
            f"incompatible shapes {A_fine.shape} and {P.shape} for coarsening"
        )
    return (P.T @ (A_fine @ P)).tocsr()


@dataclass(frozen=True)
class AssembledSystem:
    """One parameter instance: SPD operator on free DoFs and its rhs."""

    operator: sp.csr_matrix
    rhs: np.ndarray
    mu: np.ndarray
    free: np.ndarray  # free node ids on the full grid


class ParametricProblem:
    """Factory for A_h(mu), f_h(mu) and the multigrid hierarchy of a problem.

    Affine stiffness terms are assembled once per mesh, split into
    free-free / free-Dirichlet blocks, and Galerkin-coarsened term by term,
    so per-parameter operators at every level are sparse linear combinations.
    Immutable after construction; safe to share across concurrent solves.
    """

    def __init__(self, spec: ProblemSpec, levels: int = 3, m0: int = 2):
        self.spec = spec
        self.mesh = build_hierarchy(levels, m0)
        self.free_by_level = []
        self.dir_by_level = []
        for n in self.mesh.cells:
            mask = spec.dirichlet_mask(n)
            self.free_by_level.append(np.flatnonzero(~mask))
            self.dir_by_level.append(np.flatnonzero(mask))
        self.free = self.free_by_level[-1]
        self.n_free = len(self.free)

        nf = self.mesh.finest_cells
        self._terms_ff = []
        self._terms_fd = []
        for term in spec.diffusion_terms:
            A_full = assemble_stiffness_kernel(nf, term.kernel, term.aniso)
            self._terms_ff.append(A_full[self.free][:, self.free].tocsr())
            self._terms_fd.append(A_full[self.free][:, self.dir_by_level[-1]].tocsr())

        # free-DoF prolongations and per-level coarsened terms
        self.prolongations = []
        for i, P in enumerate(self.mesh.prolongations):
            Pf = P[self.free_by_level[i + 1]][:, self.free_by_level[i]].tocsr()
            self.prolongations.append(Pf)
        self._terms_by_level = [None] * self.mesh.levels
        self._terms_by_level[-1] = self._terms_ff
        for i in range(self.mesh.levels - 2, -1, -1):
            P = self.prolongations[i]
            self._terms_by_level[i] = [
                galerkin_coarsen(A, P) for A in self._terms_by_level[i + 1]
            ]

        self._cached_load = None

    @property
    def finest_level(self) -> int:
        return self.mesh.levels - 1

    def _thetas(self, mu) -> list[float]:
        mu = self.spec.check_mu(mu)
        return [float(t.theta(mu)) for t in self.spec.diffusion_terms]

    def operator(self, mu, level: int | None = None) -> sp.csr_matrix:
        """A_h(mu) on the free DoFs of the given level (finest by default)."""
        if level is None:
            level = self.finest_level
        thetas = self._thetas(mu)
        terms = self._terms_by_level[level]
        A = thetas[0] * terms[0]
        for th, T in zip(thetas[1:], terms[1:]):
            A = A + th * T
        return A.tocsr()

    def operator_rows(self, mu, rows) -> sp.csr_matrix:
        """Sparse slice A_h(mu)[rows, :] without forming the full operator."""
        rows = list(rows)
        thetas = self._thetas(mu)
        out = thetas[0] * self._terms_ff[0][rows, :]
        for th, T in zip(thetas[1:], self._terms_ff[1:]):
            out = out + th * T[rows, :]
        return out.tocsr()

    def rhs(self, mu) -> np.ndarray:
        """f_h(mu) on free DoFs, with Dirichlet data eliminated into it."""
        mu = self.spec.check_mu(mu)
        n = self.mesh.finest_cells
        if self.spec.source_mu_dependent or self._cached_load is None:
            load = assemble_load(n, self.spec.source, mu)
            if not self.spec.source_mu_dependent:
                self._cached_load = load
        else:
            load = self._cached_load
        f = load[self.free].copy()
        dir_ids = self.dir_by_level[-1]
        if len(dir_ids):
            X, Y, Z = node_coords(n)
            g = self.spec.dirichlet(X[dir_ids], Y[dir_ids], Z[dir_ids], mu)
            thetas = self._thetas(mu)
            for th, T in zip(thetas, self._terms_fd):
                f -= th * (T @ g)
        return f

    def system(self, mu) -> AssembledSystem:
        mu = self.spec.check_mu(mu)
        return AssembledSystem(
            operator=self.operator(mu), rhs=self.rhs(mu), mu=mu, free=self.free
        )


def assemble_system(spec: ProblemSpec, mu, n: int) -> AssembledSystem:
    """Direct one-off assembly at a given resolution (no affine caching).

    Cross-checkable against ParametricProblem; used when no hierarchy is
    needed.
    """
    mu = spec.check_mu(mu)
    mask = spec.dirichlet_mask(n)
    free = np.flatnonzero(~mask)
    dir_ids = np.flatnonzero(mask)
    A_full = None
    for term in spec.diffusion_terms:
        th = float(term.theta(mu))
        T = assemble_stiffness_kernel(n, term.kernel, term.aniso)
        A_full = th * T if A_full is None else A_full + th * T
    kmin = spec.diffusion(*[np.asarray(v) for v in quad_coords(n)], mu).min()
    if kmin <= 0:
        raise ValueError("non-positive diffusion coefficient")
    load = assemble_load(n, spec.source, mu)
    f = load[free].copy()
    if len(dir_ids):
        X, Y, Z = node_coords(n)
        g = spec.dirichlet(X[dir_ids], Y[dir_ids], Z[dir_ids], mu)
        f -= A_full[free][:, dir_ids] @ g
    A = A_full[free][:, free].tocsr()
    return AssembledSystem(operator=A, rhs=f, mu=mu, free=free)
