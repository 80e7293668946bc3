"""Reduced-basis warm-started solves and the method registry.

Three solver identities are supported, differing in initial guess and
preconditioner:

* ``mgcg``       — zero initial guess, multigrid preconditioner;
* ``rbi-mgcg``   — over-collocation reduced initial guess, multigrid;
* ``rbi-msrbcg`` — POD reduced initial guess, multispace RB preconditioner.

After the reduced initialization a single continuous PCG run refines the
iterate (restarting the Krylov space each outer step would only discard
conjugacy; the per-iteration reporting is unchanged).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .krylov import pcg_solve
from .msrb import MsrbHierarchy, MsrbPreconditioner
from .multigrid import MgContext, mg_vcycle
from .rb import L1rocModel, l1roc_online, rbm_pod_solve

METHODS = ("mgcg", "rbi-mgcg", "rbi-msrbcg")

_PAIRINGS = {
    "mgcg": ("zero", "mg"),
    "rbi-mgcg": ("l1roc", "mg"),
    "rbi-msrbcg": ("pod", "msrb"),
}


@dataclass(frozen=True)
class MethodConfig:
    """Identity and numeric settings of one solver run."""

    method: str
    delta: float = 1e-16
    l_max: int = 40
    N: int = 0  # reduced dimension (0 for plain mgcg)
    nu: int = 1
    smoother: str = "auto"
    K_max: int = 8
    initializer: str = ""
    preconditioner: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        init, prec = _PAIRINGS[self.method]
        object.__setattr__(self, "initializer", self.initializer or init)
        object.__setattr__(self, "preconditioner", self.preconditioner or prec)

    def config_hash(self) -> str:
        payload = json.dumps(self.__dict__, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def initial_residual(A, f, u0) -> float:
    """||f - A u0|| / ||f|| (absolute norm when ||f|| = 0)."""
    f = np.asarray(f, dtype=np.float64)
    r = f - A @ np.asarray(u0, dtype=np.float64)
    fnorm = np.linalg.norm(f)
    return float(np.linalg.norm(r) / (fnorm if fnorm > 0 else 1.0))


def make_initial_guess(A, f, cfg: MethodConfig, l1roc_model: L1rocModel | None = None,
                       msrb_hier: MsrbHierarchy | None = None) -> np.ndarray:
    if cfg.initializer == "zero":
        return np.zeros(len(f))
    if cfg.initializer == "l1roc":
        if l1roc_model is None:
            raise ValueError(f"{cfg.method} requires a trained over-collocation model")
        model = l1roc_model if cfg.N in (0, l1roc_model.dim) else l1roc_model.prefix(cfg.N)
        u0, _ = l1roc_online(model, A, f)
        return u0
    if cfg.initializer == "pod":
        if msrb_hier is None:
            raise ValueError(f"{cfg.method} requires a trained multispace hierarchy")
        return rbm_pod_solve(A, f, msrb_hier.init_basis.basis)
    raise ValueError(f"unknown initializer {cfg.initializer!r}")


def rbi_pcg_solve(A, f, cfg: MethodConfig, mg_ctx: MgContext | None = None,
                  l1roc_model: L1rocModel | None = None,
                  msrb_hier: MsrbHierarchy | None = None, mu=None,
                  residual_log: list | None = None):
    """Initialize per the method pairing, then refine with one PCG run."""
    u0 = make_initial_guess(A, f, cfg, l1roc_model, msrb_hier)

    if cfg.preconditioner == "mg":
        if mg_ctx is None:
            raise ValueError("multigrid preconditioning requires a context")
        precond = lambda r, k: mg_vcycle(r, mg_ctx)
    elif cfg.preconditioner == "msrb":
        if msrb_hier is None:
            raise ValueError("msrb preconditioning requires a trained hierarchy")
        precond = MsrbPreconditioner(A, msrb_hier)
    else:
        raise ValueError(f"unknown preconditioner {cfg.preconditioner!r}")

    if residual_log is not None:
        inner = precond
        precond = lambda r, k: (residual_log.append(r.copy()), inner(r, k))[1]

    x, report = pcg_solve(A, f, u0, precond=precond, delta=cfg.delta,
                          l_max=cfg.l_max, method=cfg.method, mu=mu)
    report.config.update(
        N=cfg.N, nu=cfg.nu, smoother=cfg.smoother, K_max=cfg.K_max,
        initializer=cfg.initializer, preconditioner=cfg.preconditioner,
        config_hash=cfg.config_hash(),
    )
    return x, report
