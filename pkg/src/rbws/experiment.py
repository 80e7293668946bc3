"""Experiment orchestration: sampling, training, test sweeps, reports.

One run samples the training and test sets, trains the requested reduced
models (timed as offline cost), solves every test system with every
configured method (timed as online cost), and writes CSV plus JSON
summaries. Fixed seed means bit-identical numeric output.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .grid import ParametricProblem
from .hf import HighFidelitySolver
from .metrics import average_residual_curve, break_even
from .msrb import msrb_train
from .multigrid import mg_context_for
from .problems import get_problem
from .rb import l1roc_offline
from .sampling import lhs_sample
from .warmstart import METHODS, MethodConfig, rbi_pcg_solve

TIMING_PROTOCOL = ("online time excludes operator and rhs assembly; "
                   "it includes preconditioner setup, reduced "
                   "initialization, and the PCG iteration")


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one benchmark run."""

    problem: str = "example-1"
    levels: int = 3
    m0: int = 4
    n_train: int = 40
    n_test: int = 20
    seed: int = 0
    methods: tuple = ("mgcg", "rbi-mgcg", "rbi-msrbcg")
    rb_dims: tuple = (10,)
    deltas: tuple = (1e-16,)
    l_max: int = 40
    k_max: int = 8
    nu: int = 1
    smoother: str = "auto"
    out_dir: str = "results"

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for d in self.deltas:
            if not 0 < d <= 1:
                raise ValueError(f"delta {d} outside (0, 1]")

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        known = {f.name for f in dataclasses.fields(cls)}
        bad = set(raw) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        for key in ("methods", "rb_dims", "deltas"):
            if key in raw and isinstance(raw[key], list):
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("methods", "rb_dims", "deltas"):
            d[key] = list(d[key])
        return d


@dataclass
class SweepReport:
    """Everything measured in one experiment run."""

    config: ExperimentConfig
    reports: dict  # (method, N, delta) -> list of SolveReport over the test set
    t_off: dict  # method -> offline training seconds
    t_on: dict  # (method, N, delta) -> mean online seconds per solve
    bep: dict  # (method, N, delta) -> break-even point (math.inf allowed)

    def label(self, key) -> str:
        method, N, delta = key
        return f"{method}-N{N}-d{delta:g}" if method != "mgcg" else f"mgcg-d{delta:g}"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def run_experiment(cfg: ExperimentConfig, progress=None) -> SweepReport:
    log = progress or (lambda msg: None)
    spec = get_problem(cfg.problem)
    prob = ParametricProblem(spec, levels=cfg.levels, m0=cfg.m0)
    train_seed, test_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    train = lhs_sample(spec.p, cfg.n_train, spec.bounds, seed=train_seed)
    test = lhs_sample(spec.p, cfg.n_test, spec.bounds, seed=test_seed)
    hf = HighFidelitySolver(prob, method="lu")
    N_max = max(cfg.rb_dims) if cfg.rb_dims else 0

    t_off: dict = {m: 0.0 for m in cfg.methods}
    l1roc_model = None
    msrb_hiers: dict = {}
    if "rbi-mgcg" in cfg.methods:
        log(f"training over-collocation model, N={N_max}")
        t0 = time.perf_counter()
        l1roc_model = l1roc_offline(train, N_max, hf, prob.operator,
                                    prob.operator_rows, prob.rhs, seed=cfg.seed)
        t_off["rbi-mgcg"] = time.perf_counter() - t0
    if "rbi-msrbcg" in cfg.methods:
        for N in cfg.rb_dims:
            log(f"training multispace hierarchy, N={N}")
            t0 = time.perf_counter()
            msrb_hiers[N] = msrb_train(train, N, cfg.k_max, hf,
                                       prob.operator, prob.rhs)
            t_off["rbi-msrbcg"] += time.perf_counter() - t0

    systems = [(prob.operator(mu), prob.rhs(mu)) for mu in test]
    reports: dict = {}
    t_on: dict = {}
    for method in cfg.methods:
        dims = (0,) if method == "mgcg" else cfg.rb_dims
        for N in dims:
            for delta in cfg.deltas:
                key = (method, N, delta)
                mcfg = MethodConfig(method, delta=delta, l_max=cfg.l_max, N=N,
                                    nu=cfg.nu, smoother=cfg.smoother,
                                    K_max=cfg.k_max)
                runs = []
                elapsed = 0.0
                log(f"sweep {method} N={N} delta={delta:g}")
                for mu, (A, f) in zip(test, systems):
                    t0 = time.perf_counter()
                    ctx = None
                    if method in ("mgcg", "rbi-mgcg"):
                        ctx = mg_context_for(prob, mu, nu=cfg.nu,
                                             smoother=cfg.smoother)
                    _, rep = rbi_pcg_solve(
                        A, f, mcfg, mg_ctx=ctx, l1roc_model=l1roc_model,
                        msrb_hier=msrb_hiers.get(N), mu=mu)
                    elapsed += time.perf_counter() - t0
                    runs.append(rep)
                reports[key] = runs
                t_on[key] = elapsed / len(test)

    bep: dict = {}
    for key in reports:
        method, N, delta = key
        if method == "mgcg":
            continue
        base = ("mgcg", 0, delta)
        if base in t_on:
            bep[key] = break_even(t_off[method], t_on[base], t_on[key])
    return SweepReport(config=cfg, reports=reports, t_off=t_off,
                       t_on=t_on, bep=bep)


def write_reports(report: SweepReport, out_dir) -> list[Path]:
    """Emit residual-curve CSV, summary CSV, and JSON metadata."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    keys = sorted(report.reports, key=report.label)
    curves = {k: average_residual_curve(report.reports[k]) for k in keys}
    kmax = max(len(c) for c in curves.values())
    path = out / "residuals.csv"
    with open(path, "w") as fh:
        fh.write("k," + ",".join(report.label(k) for k in keys) + "\n")
        for i in range(kmax):
            row = [str(i)]
            for k in keys:
                c = curves[k]
                row.append(_fmt(float(c[min(i, len(c) - 1)])))
            fh.write(",".join(row) + "\n")
    written.append(path)

    path = out / "summary.csv"
    with open(path, "w") as fh:
        fh.write("method,N,delta,L,t_off,t_on,BEP\n")
        for k in keys:
            method, N, delta = k
            runs = report.reports[k]
            mean_L = float(np.mean([r.iterations for r in runs]))
            fh.write(",".join([
                method, str(N), _fmt(float(delta)), _fmt(mean_L),
                _fmt(report.t_off.get(method, 0.0)), _fmt(report.t_on[k]),
                _fmt(report.bep.get(k)),
            ]) + "\n")
    written.append(path)

    path = out / "summary.json"
    meta = {
        "config": report.config.as_dict(),
        "timing_protocol": TIMING_PROTOCOL,
        "results": [
            {
                "method": k[0], "N": k[1], "delta": k[2],
                "mean_iterations": float(np.mean(
                    [r.iterations for r in report.reports[k]])),
                "mean_true_residual": float(np.mean(
                    [r.true_residual for r in report.reports[k]])),
                "t_off": report.t_off.get(k[0], 0.0),
                "t_on": report.t_on[k],
                "bep": ("inf" if k in report.bep and math.isinf(report.bep[k])
                        else report.bep.get(k)),
            }
            for k in keys
        ],
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2)
    written.append(path)
    return written
