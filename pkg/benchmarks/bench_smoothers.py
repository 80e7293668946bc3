"""Compare the compiled smoother kernels against the numpy fallback.

Times Gauss-Seidel and Jacobi sweeps on the finest-level operator of each
example, plus a full MGCG solve with each backend. Run directly:

    python3 benchmarks/bench_smoothers.py [--levels 3] [--m0 4] [--repeats 20]
"""

import argparse
import time

import numpy as np


from rbws.grid import ParametricProblem
from rbws.kernels import BACKEND, Smoother
from rbws.multigrid import mg_context_for, mgcg_solve
from rbws.problems import get_problem


def time_sweeps(smoother, b, kind, repeats):
    u = np.zeros_like(b)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        smoother.sweep(u, b, kind, 1)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--m0", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()

    if BACKEND != "cython":
        print("compiled backend unavailable; nothing to compare against")
        return

    rng = np.random.default_rng(0)
    for pid in ("example-1", "example-2"):
        spec = get_problem(pid)
        prob = ParametricProblem(spec, levels=args.levels, m0=args.m0)
        mu = spec.bounds[:, 0] + 0.5 * (spec.bounds[:, 1] - spec.bounds[:, 0])
        A, f = prob.operator(mu), prob.rhs(mu)
        b = rng.standard_normal(A.shape[0])
        print(f"\n{pid}  ({A.shape[0]} unknowns, backend={BACKEND})")

        for kind in ("gauss-seidel-symmetric", "jacobi"):
            sm_c = Smoother(A)
            t_c = time_sweeps(sm_c, b, kind, args.repeats)
            sm_py = Smoother(A, backend="numpy")
            t_py = time_sweeps(sm_py, b, kind, args.repeats)
            u_c = sm_c.sweep(np.zeros_like(b), b, kind, 1)
            u_py = sm_py.sweep(np.zeros_like(b), b, kind, 1)
            err = np.linalg.norm(u_c - u_py) / np.linalg.norm(u_c)
            print(f"  {kind:<24} compiled {t_c*1e3:8.3f} ms   "
                  f"fallback {t_py*1e3:8.3f} ms   "
                  f"speedup {t_py/t_c:5.1f}x   agreement {err:.1e}")

        ctx = mg_context_for(prob, mu)
        t0 = time.perf_counter()
        _, rep = mgcg_solve(A, f, np.zeros_like(f), ctx, delta=1e-10)
        t_solve = time.perf_counter() - t0
        print(f"  full MGCG solve: {rep.iterations} iterations, "
              f"{t_solve*1e3:.1f} ms")


if __name__ == "__main__":
    main()
