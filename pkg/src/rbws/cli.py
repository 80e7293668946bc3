"""Command-line harness around the experiment driver.

Exit codes: 0 success, 1 configuration error, 2 solver failure.
"""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .experiment import ExperimentConfig, run_experiment, write_reports
from .grid import ParametricProblem
from .hf import HighFidelitySolver
from .krylov import OperatorError
from .metrics import rb_accuracy_curve, residual_spectrum
from .msrb import msrb_train
from .multigrid import mg_context_for
from .problems import get_problem
from .rb import DegenerateBasisError, l1roc_offline
from .sampling import lhs_sample
from .serialize import ModelFormatError, load_model, save_model
from .warmstart import METHODS, MethodConfig, rbi_pcg_solve

CONFIG_ERROR = 1
SOLVER_ERROR = 2

_CONFIG_ERRORS = (ValueError, TypeError, KeyError, OSError, ModelFormatError)
_SOLVER_ERRORS = (OperatorError, DegenerateBasisError, np.linalg.LinAlgError)


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_config(config, **overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_yaml(config) if config else ExperimentConfig()
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _common(func):
    for opt in reversed([
        click.option("--config", type=click.Path(exists=True), default=None,
                     help="YAML experiment configuration."),
        click.option("--problem", default=None,
                     help="Problem id (example-1 or example-2)."),
        click.option("--grid-levels", "levels", type=int, default=None,
                     help="Number of grid levels."),
        click.option("--seed", type=int, default=None, help="Sampling seed."),
        click.option("--out", type=click.Path(), default=None,
                     help="Output file or directory."),
    ]):
        func = opt(func)
    return func


@click.group()
def main():
    """Reduced-basis warm-started solver benchmarks."""


def _setup(cfg):
    spec = get_problem(cfg.problem)
    prob = ParametricProblem(spec, levels=cfg.levels, m0=cfg.m0)
    train_seed, test_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    train = lhs_sample(spec.p, cfg.n_train, spec.bounds, seed=train_seed)
    test = lhs_sample(spec.p, cfg.n_test, spec.bounds, seed=test_seed)
    return spec, prob, train, test


@main.command()
@_common
@click.option("--method", default="rbi-mgcg",
              type=click.Choice(["rbi-mgcg", "rbi-msrbcg"]),
              help="Which trained model to produce.")
@click.option("--rb-dim", "rb_dim", type=int, default=None,
              help="Reduced basis dimension N.")
def train(config, problem, levels, seed, out, method, rb_dim):
    """Train a reduced model and save it."""
    try:
        cfg = _load_config(config, problem=problem, levels=levels, seed=seed,
                           rb_dims=(rb_dim,) if rb_dim else None)
        N = max(cfg.rb_dims)
        spec, prob, train_mus, _ = _setup(cfg)
        out = out or f"{method}-{cfg.problem}-N{N}.rbws"
    except _CONFIG_ERRORS as exc:
        _fail(CONFIG_ERROR, str(exc))
    try:
        hf = HighFidelitySolver(prob, method="lu")
        if method == "rbi-mgcg":
            model = l1roc_offline(train_mus, N, hf, prob.operator,
                                  prob.operator_rows, prob.rhs, seed=cfg.seed)
        else:
            model = msrb_train(train_mus, N, cfg.k_max, hf,
                               prob.operator, prob.rhs)
        save_model(model, out)
    except _SOLVER_ERRORS as exc:
        _fail(SOLVER_ERROR, str(exc))
    click.echo(f"saved {method} model (N={N}) to {out}")


@main.command()
@_common
@click.option("--method", default="mgcg", type=click.Choice(list(METHODS)),
              help="Solver identity.")
@click.option("--rb-dim", "rb_dim", type=int, default=None)
@click.option("--delta", type=float, default=None, help="Residual tolerance.")
@click.option("--model", "model_path", type=click.Path(exists=True),
              default=None, help="Trained model file for the rbi methods.")
def solve(config, problem, levels, seed, out, method, rb_dim, delta, model_path):
    """Solve one sampled test system and report the convergence history."""
    try:
        cfg = _load_config(config, problem=problem, levels=levels, seed=seed,
                           rb_dims=(rb_dim,) if rb_dim else None,
                           deltas=(delta,) if delta else None)
        spec, prob, _, test_mus = _setup(cfg)
        model = load_model(model_path) if model_path else None
        if method != "mgcg" and model is None:
            raise ValueError(f"{method} needs --model")
    except _CONFIG_ERRORS as exc:
        _fail(CONFIG_ERROR, str(exc))
    try:
        mu = test_mus[0]
        A, f = prob.operator(mu), prob.rhs(mu)
        N = max(cfg.rb_dims)
        mcfg = MethodConfig(method, delta=cfg.deltas[0], l_max=cfg.l_max,
                            N=N, nu=cfg.nu, smoother=cfg.smoother,
                            K_max=cfg.k_max)
        ctx = None
        if method in ("mgcg", "rbi-mgcg"):
            ctx = mg_context_for(prob, mu, nu=cfg.nu, smoother=cfg.smoother)
        x, rep = rbi_pcg_solve(
            A, f, mcfg, mg_ctx=ctx,
            l1roc_model=model if method == "rbi-mgcg" else None,
            msrb_hier=model if method == "rbi-msrbcg" else None, mu=mu)
    except _SOLVER_ERRORS as exc:
        _fail(SOLVER_ERROR, str(exc))
    click.echo(f"mu = {np.array2string(mu, precision=6)}")
    click.echo(f"iterations = {rep.iterations}, converged = {rep.converged}, "
               f"true residual = {rep.true_residual:.3e}")
    if out:
        with open(out, "w") as fh:
            json.dump({"method": method, "mu": list(mu),
                       "iterations": rep.iterations,
                       "converged": rep.converged,
                       "true_residual": rep.true_residual,
                       "history": list(map(float, rep.history)),
                       "config": rep.config}, fh, indent=2)
        click.echo(f"wrote {out}")


@main.command()
@_common
@click.option("--method", "methods", multiple=True,
              type=click.Choice(list(METHODS)), help="Methods to sweep.")
@click.option("--rb-dim", "rb_dims", multiple=True, type=int)
@click.option("--delta", "deltas", multiple=True, type=float)
def sweep(config, problem, levels, seed, out, methods, rb_dims, deltas):
    """Run the full benchmark sweep and write CSV/JSON reports."""
    try:
        cfg = _load_config(config, problem=problem, levels=levels, seed=seed,
                           methods=methods or None, rb_dims=rb_dims or None,
                           deltas=deltas or None, out_dir=out)
    except _CONFIG_ERRORS as exc:
        _fail(CONFIG_ERROR, str(exc))
    try:
        report = run_experiment(cfg, progress=lambda m: click.echo(m, err=True))
        written = write_reports(report, cfg.out_dir)
    except _SOLVER_ERRORS as exc:
        _fail(SOLVER_ERROR, str(exc))
    for p in written:
        click.echo(f"wrote {p}")


@main.command()
@_common
@click.option("--rb-dim", "rb_dim", type=int, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--iterations", "k_count", type=int, default=4,
              help="Number of iteration indices to analyze.")
def spectrum(config, problem, levels, seed, out, rb_dim, delta, k_count):
    """Eigenvalue spectra of per-iteration residual collections."""
    try:
        cfg = _load_config(config, problem=problem, levels=levels, seed=seed,
                           rb_dims=(rb_dim,) if rb_dim else None,
                           deltas=(delta,) if delta else None)
        spec, prob, train_mus, test_mus = _setup(cfg)
    except _CONFIG_ERRORS as exc:
        _fail(CONFIG_ERROR, str(exc))
    try:
        hf = HighFidelitySolver(prob, method="lu")
        N = max(cfg.rb_dims)
        hier = msrb_train(train_mus, N, cfg.k_max, hf, prob.operator, prob.rhs)
        logs = {k: [] for k in range(k_count)}
        mcfg = MethodConfig("rbi-msrbcg", delta=cfg.deltas[0],
                            l_max=cfg.l_max, N=N, K_max=cfg.k_max)
        for mu in test_mus:
            A, f = prob.operator(mu), prob.rhs(mu)
            residuals = []
            rbi_pcg_solve(A, f, mcfg, msrb_hier=hier, mu=mu,
                          residual_log=residuals)
            for k in range(min(k_count, len(residuals))):
                logs[k].append(residuals[k])
        rows = []
        for k in range(k_count):
            if not logs[k]:
                continue
            lam, degenerate = residual_spectrum(logs[k])
            rows.append((k, lam, degenerate))
    except _SOLVER_ERRORS as exc:
        _fail(SOLVER_ERROR, str(exc))
    out = out or "spectrum.csv"
    with open(out, "w") as fh:
        fh.write("k,n,lambda_rel\n")
        for k, lam, _deg in rows:
            for n, v in enumerate(lam):
                fh.write(f"{k},{n},{format(float(v), '.17g')}\n")
    for k, lam, _deg in rows:
        count = int(np.sum(lam > 1e-10))
        click.echo(f"k={k}: {len(lam)} eigenvalues, {count} above 1e-10")
    click.echo(f"wrote {out}")


@main.command("accuracy-curve")
@_common
@click.option("--rb-dim", "rb_dim", type=int, default=None,
              help="Largest basis dimension to evaluate.")
def accuracy_curve(config, problem, levels, seed, out, rb_dim):
    """Max test-set relative residual of reduced solutions per dimension N."""
    try:
        cfg = _load_config(config, problem=problem, levels=levels, seed=seed,
                           rb_dims=(rb_dim,) if rb_dim else None)
        spec, prob, train_mus, test_mus = _setup(cfg)
    except _CONFIG_ERRORS as exc:
        _fail(CONFIG_ERROR, str(exc))
    try:
        hf = HighFidelitySolver(prob, method="lu")
        N = max(cfg.rb_dims)
        model = l1roc_offline(train_mus, N, hf, prob.operator,
                              prob.operator_rows, prob.rhs, seed=cfg.seed)
        systems = [(prob.operator(mu), prob.rhs(mu)) for mu in test_mus]
        curve = rb_accuracy_curve(model, systems, range(model.dim + 1))
    except _SOLVER_ERRORS as exc:
        _fail(SOLVER_ERROR, str(exc))
    out = out or "accuracy_curve.csv"
    with open(out, "w") as fh:
        fh.write("N,r_N\n")
        for N_val, r in curve:
            fh.write(f"{N_val},{format(r, '.17g')}\n")
    for N_val, r in curve:
        click.echo(f"N={N_val}: r_N = {r:.3e}")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--out", type=click.Path(exists=True), required=True,
              help="Results directory from a sweep run.")
def report(out):
    """Print the summary table of a finished sweep."""
    path = Path(out) / "summary.json"
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(CONFIG_ERROR, str(exc))
    click.echo(f"{'method':<12}{'N':>5}{'delta':>10}{'L':>8}"
               f"{'t_off':>10}{'t_on':>10}{'BEP':>10}")
    for row in data["results"]:
        bep = row["bep"]
        bep_s = "-" if bep is None else (
            "inf" if bep == "inf" or (isinstance(bep, float) and math.isinf(bep))
            else f"{bep:.1f}")
        click.echo(f"{row['method']:<12}{row['N']:>5}{row['delta']:>10.0e}"
                   f"{row['mean_iterations']:>8.1f}{row['t_off']:>10.2f}"
                   f"{row['t_on']:>10.4f}{bep_s:>10}")
    click.echo(f"timing protocol: {data['timing_protocol']}")


if __name__ == "__main__":
    main()
