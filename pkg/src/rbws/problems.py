"""The two parametrized 3D diffusion problems on the unit cube.

Both diffusion coefficients are affine in the parameter,
``K(x; mu) = sum_q theta_q(mu) * kappa_q(x) * diag(aniso)``, which lets the
assembly layer build each stiffness term once per mesh and combine them per
parameter with a sparse axpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class DiffusionTerm:
    """One affine component of the diffusion tensor."""

    theta: Callable[[np.ndarray], float]
    kernel: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    aniso: tuple[float, float, float] = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ProblemSpec:
    """A parametrized diffusion boundary value problem on (0,1)^3."""

    pid: str
    p: int
    bounds: np.ndarray  # (p, 2) per-dimension [min, max]
    diffusion_terms: Sequence[DiffusionTerm]
    source: Callable  # (x, y, z, mu) -> values
    dirichlet: Callable  # (x, y, z, mu) -> boundary values
    neumann_face_x1: bool = False  # Ex.2: zero-flux face at x = 1
    source_mu_dependent: bool = True

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=np.float64)
        if b.shape != (self.p, 2):
            raise ValueError("bounds must be (p, 2)")
        if np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("each parameter range needs min < max")
        object.__setattr__(self, "bounds", b)

    def check_mu(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=np.float64)
        if mu.shape != (self.p,):
            raise ValueError(f"{self.pid} expects {self.p}-dimensional parameters")
        if np.any(mu < self.bounds[:, 0]) or np.any(mu > self.bounds[:, 1]):
            raise ValueError(f"parameter {mu} outside {self.pid} bounds")
        return mu

    def diffusion(self, x, y, z, mu):
        """Scalar part of K at points (x, y, z); isotropic terms only add up."""
        mu = self.check_mu(mu)
        out = np.zeros(np.broadcast(x, y, z).shape)
        for term in self.diffusion_terms:
            out = out + term.theta(mu) * term.kernel(x, y, z)
        return out

    def dirichlet_mask(self, n: int) -> np.ndarray:
        """Boolean mask over the (n+1)^3 lexicographic nodes (x fastest)."""
        idx = np.arange(n + 1)
        ix, iy, iz = np.meshgrid(idx, idx, idx, indexing="ij")
        # lexicographic flattening with x fastest: node = ix + (n+1)*(iy + (n+1)*iz)
        on_boundary = (
            (ix == 0) | (ix == n) | (iy == 0) | (iy == n) | (iz == 0) | (iz == n)
        )
        if self.neumann_face_x1:
            # The zero-flux face x=1 is closed: its edge nodes stay free.
            on_boundary &= ix != n
        mask = on_boundary.transpose(2, 1, 0).ravel()  # z slowest -> flat order
        return mask


def _radial2(x, y, z):
    return 4.0 * (x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2


def _ex1_oscillatory(x, y, z):
    return np.sin(20.0 * np.pi * _radial2(x, y, z)) ** 2


def _ex1_source(x, y, z, mu):
    return 3.0 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y) * np.sin(np.pi * z)


def _ex1_dirichlet(x, y, z, mu):
    return (1.0 - mu[1]) * np.cos(10.0 * np.pi * _radial2(x, y, z)) + mu[1] * np.cos(
        10.0 * np.pi * (x + y + z)
    )


def example1() -> ProblemSpec:
    """Dirichlet problem: oscillatory isotropic coefficient, 2 parameters."""
    return ProblemSpec(
        pid="example-1",
        p=2,
        bounds=np.array([[0.0, 2.0], [0.0, 1.0]]),
        diffusion_terms=(
            DiffusionTerm(theta=lambda mu: 1.0, kernel=lambda x, y, z: np.ones(np.broadcast(x, y, z).shape)),
            DiffusionTerm(theta=lambda mu: mu[0], kernel=_ex1_oscillatory),
        ),
        source=_ex1_source,
        dirichlet=_ex1_dirichlet,
        neumann_face_x1=False,
        source_mu_dependent=False,
    )


_EX2_ANISO = (1.0, 1.0, 1.0e-2)


def _indicator(y_lo, y_hi, z_lo, z_hi):
    def kernel(x, y, z):
        return (
            ((y >= y_lo) & (y < y_hi)) & ((z >= z_lo) & (z < z_hi))
        ).astype(np.float64)

    return kernel


def _ex2_source(x, y, z, mu):
    r2 = (x - mu[3]) ** 2 + (y - mu[4]) ** 2 + (z - mu[5]) ** 2
    return mu[6] + np.exp(-r2 / mu[6]) / mu[6]


def _ex2_dirichlet(x, y, z, mu):
    return np.zeros(np.broadcast(x, y, z).shape)


def example2() -> ProblemSpec:
    """Mixed problem: piecewise-constant anisotropic coefficient, 7 parameters."""
    return ProblemSpec(
        pid="example-2",
        p=7,
        bounds=np.array(
            [[0.1, 1.0]] * 3 + [[0.4, 0.6]] * 3 + [[0.25, 0.5]]
        ),
        diffusion_terms=(
            DiffusionTerm(theta=lambda mu: mu[0], kernel=_indicator(0.0, 0.5, 0.0, 0.5), aniso=_EX2_ANISO),
            DiffusionTerm(theta=lambda mu: mu[1], kernel=_indicator(0.0, 0.5, 0.5, 1.01), aniso=_EX2_ANISO),
            DiffusionTerm(theta=lambda mu: mu[2], kernel=_indicator(0.5, 1.01, 0.0, 0.5), aniso=_EX2_ANISO),
            DiffusionTerm(theta=lambda mu: 1.0, kernel=_indicator(0.5, 1.01, 0.5, 1.01), aniso=_EX2_ANISO),
        ),
        source=_ex2_source,
        dirichlet=_ex2_dirichlet,
        neumann_face_x1=True,
        source_mu_dependent=True,
    )


_REGISTRY = {"example-1": example1, "example-2": example2}


def get_problem(pid: str) -> ProblemSpec:
    try:
        return _REGISTRY[pid]()
    except KeyError:
        raise ValueError(f"unknown problem id {pid!r}; choices: {sorted(_REGISTRY)}") from None
