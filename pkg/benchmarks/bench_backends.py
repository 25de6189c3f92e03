"""Compare the compiled sweeps against the pure-Python path.

Times the shipped two-node benchmark and a denser six-node instance on both
backends and prints per-instance wall times plus the speedup. Run as

    python benchmarks/bench_backends.py [--repeats 3]
"""

import argparse
import os
import time

import numpy as np

import gmfg
from gmfg import backend


def build_instances():
    two = gmfg.build_graph(2, [(1, 2), (2, 1)])
    bench = gmfg.MfgProblem(
        two,
        gmfg.quadratic_congestion_family(
            two, f=gmfg.logit_coupling(1.0, 0.01), g=gmfg.logit_coupling(0.1, 0.01)
        ),
        np.array([0.8, 0.2]),
        gmfg.TimeGrid(1.0, 200),
    )
    n = 6
    dense = gmfg.build_graph(n, [(s, t) for s in range(1, n + 1) for t in range(1, n + 1) if s != t])
    rng = np.random.default_rng(7)
    m0 = rng.dirichlet(np.ones(n))
    big = gmfg.MfgProblem(
        dense,
        gmfg.quadratic_congestion_family(
            dense, alpha=1.0, beta=0.5, eps=0.1,
            f=gmfg.logit_coupling(0.5, 0.01), g=gmfg.linear_coupling(-rng.uniform(0.2, 1.0, n)),
        ),
        m0,
        gmfg.TimeGrid(1.0, 400),
    )
    # the dense congestion instance needs heavy damping to converge
    return [("two_node_benchmark", bench, 0.5), ("six_node_congestion", big, 0.1)]


def time_solve(problem, omega, mode, repeats):
    os.environ["GMFG_BACKEND"] = mode
    try:
        best = float("inf")
        result = None
        for _ in range(repeats):
            start = time.perf_counter()
            result = gmfg.solve_mfg(problem, omega=omega, tol=1e-8, max_iter=200)
            best = min(best, time.perf_counter() - start)
        return best, result
    finally:
        os.environ.pop("GMFG_BACKEND", None)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if not backend.HAVE_COMPILED:
        print("compiled extension not available; timing the Python path only")

    print(f"{'instance':<22}{'backend':<10}{'iters':>6}{'best wall [s]':>15}{'speedup':>9}")
    for name, problem, omega in build_instances():
        t_py, r_py = time_solve(problem, omega, "python", args.repeats)
        print(f"{name:<22}{'python':<10}{r_py.iterations:>6}{t_py:>15.4f}{'':>9}")
        if backend.HAVE_COMPILED:
            t_c, r_c = time_solve(problem, omega, "compiled", args.repeats)
            agree = gmfg.sup_distance(r_py.m, r_c.m)
            print(
                f"{name:<22}{'compiled':<10}{r_c.iterations:>6}{t_c:>15.4f}{t_py / t_c:>8.1f}x"
                f"   (sup |m_py - m_c| = {agree:.2e})"
            )


if __name__ == "__main__":
    main()
