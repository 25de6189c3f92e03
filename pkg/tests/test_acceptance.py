"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Tolerances are pinned here and nowhere else.
"""

import json

import numpy as np
import pytest

import gmfg
from gmfg import MfgProblem, TimeGrid, Trajectory
from gmfg.cli import main
from gmfg.hjb import hjb_values, solve_hjb
from gmfg.oracles import brute_force_legendre, closed_form_two_node
from gmfg.transport import solve_transport
from gmfg.uniqueness import VERDICT_CERTIFIED, VERDICT_VIOLATED, certify_psd, two_solve_agreement
from tests.conftest import CONFIG_DIR

BENCHMARK = str(CONFIG_DIR / "benchmark_two_node.json")
VIOLATION = str(CONFIG_DIR / "violation_two_node.json")


def report(criterion: int, text: str, ok: bool):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {text}")
    assert ok, f"criterion {criterion} failed: {text}"


def linear_path(grid, start, end):
    theta = np.linspace(0.0, 1.0, grid.steps + 1)[:, None]
    return Trajectory(grid, (1.0 - theta) * np.asarray(start) + theta * np.asarray(end))


def random_hjb_instance(rng):
    """Graph + model + linear-in-time density path, moderate parameters."""
    n = int(rng.integers(1, 7))
    pairs = [(s + 1, t + 1) for s in range(n) for t in range(n) if s != t]
    edges = []
    if pairs:
        k = int(rng.integers(0, len(pairs) + 1))
        idx = rng.choice(len(pairs), size=k, replace=False)
        edges = [pairs[int(i)] for i in idx]
    graph = gmfg.build_graph(n, edges)

    def coupling(kind):
        if kind == "zero":
            return gmfg.zero_coupling()
        if kind == "logit":
            return gmfg.logit_coupling(float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.01, 0.1)))
        if kind == "linear":
            return gmfg.linear_coupling(rng.uniform(-1, 1, n))
        return gmfg.constant_coupling(rng.uniform(-1, 1, n))

    kinds = ["zero", "logit", "linear", "constant"]
    model = gmfg.quadratic_congestion_family(
        graph,
        alpha=float(rng.uniform(0, 2)),
        beta=float(rng.uniform(0, 2)),
        eps=float(rng.uniform(0.05, 0.5)),
        f=coupling(kinds[rng.integers(0, 4)]),
        g=coupling(kinds[rng.integers(0, 4)]),
    )
    grid = TimeGrid(float(rng.uniform(0.5, 1.5)), 400)
    m_traj = linear_path(grid, rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n)))
    return graph, model, m_traj


def test_criterion_1_mass_conservation(two_node, benchmark_problem, congestion_problem):
    solves = []
    # benchmark and congestion fixed points
    for problem in (benchmark_problem, congestion_problem):
        result = gmfg.solve_mfg(problem, tol=1e-8)
        solves.append(result.m.values)
    # analytic-rate transports up to N=6, K=800
    rng = np.random.default_rng(20240811)
    for n, K in ((2, 200), (4, 400), (6, 800)):
        pairs = [(s + 1, t + 1) for s in range(n) for t in range(n) if s != t]
        graph = gmfg.build_graph(n, pairs)
        base = rng.uniform(0.2, 2.0, graph.n_edges)
        wobble = rng.uniform(0.5, 3.0, graph.n_edges)
        rates = lambda t, b=base, w=wobble: b * (1.0 + 0.5 * np.sin(w * t))
        m0 = rng.dirichlet(np.ones(n))
        solves.append(solve_transport(graph, rates, m0, TimeGrid(1.0, K)).values)
    # the stiff positivity path (clamp + renormalize)
    solves.append(
        solve_transport(
            two_node, lambda t: np.array([150.0, 0.0]), np.array([1.0, 0.0]), TimeGrid(1.0, 20)
        ).values
    )
    worst = max(float(np.max(np.abs(values.sum(axis=1) - 1.0))) for values in solves)
    report(1, f"mass conservation across {len(solves)} solves, worst drift {worst:.2e} <= 1e-12", worst <= 1e-12)


def test_criterion_2_a_priori_bound():
    rng = np.random.default_rng(20240811)
    worst_margin = np.inf
    for _ in range(25):
        graph, model, m_traj = random_hjb_instance(rng)
        sol = solve_hjb(graph, model, m_traj)
        worst_margin = min(worst_margin, sol.a_priori_bound + 1e-6 - sol.max_abs_u)
        if not sol.bound_ok:
            break
    report(2, f"a priori bound on 25 randomized solves, worst margin {worst_margin:.2e}", worst_margin >= 0.0)


def test_criterion_3_comparison_monotonicity():
    rng = np.random.default_rng(20240811)
    worst_gap = np.inf
    for _ in range(25):
        graph, model, m_traj = random_hjb_instance(rng)
        base = solve_hjb(graph, model, m_traj)
        c = rng.uniform(0.0, 1.0, graph.n_nodes)
        lifted_g = gmfg.Coupling(
            "lifted", lambda i, m, fn=model.g.fn, cc=c: fn(i, m) + cc[i], model.g.margin
        )
        lifted = solve_hjb(graph, gmfg.with_terminal(model, lifted_g), m_traj)
        worst_gap = min(worst_gap, float(np.min(lifted.u.values - base.u.values)))
    report(3, f"comparison monotonicity on 25 triples, worst gap {worst_gap:.2e} >= -1e-9", worst_gap >= -1e-9)


def test_criterion_4_transport_oracle(two_node):
    grid = TimeGrid(1.0, 200)
    a, b, m1_0 = 1.0, 2.0, 1.0
    traj = solve_transport(two_node, lambda t: np.array([a, b]), np.array([m1_0, 0.0]), grid)
    worst = max(
        abs(traj.values[k, 0] - closed_form_two_node(a, b, m1_0, t))
        for k, t in enumerate(grid.times())
    )
    report(4, f"two-node transport vs closed form, max error {worst:.2e} <= 1e-8", worst <= 1e-8)


def test_criterion_5_legendre_and_gradient_oracles(two_node):
    model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.5, eps=0.1)
    rng = np.random.default_rng(20240811)
    value_err = 0.0
    grad_err = 0.0
    for _ in range(100):
        m = rng.dirichlet(np.ones(2))
        i = int(rng.integers(0, 2))
        p = rng.uniform(-2.0, 2.0, size=1)
        while abs(p[0]) < 1e-2:
            p = rng.uniform(-2.0, 2.0, size=1)
        lam_max = max(5.0, 2.0 * float(model.grad_p(i, p, m)[0]) + 1.0)
        ref = brute_force_legendre(
            lambda lam, mm: model.lagrangian(i, lam, mm), p, m, lam_max, 1000
        )
        value_err = max(value_err, abs(model.hamiltonian(i, p, m) - ref))
        h = 1e-5
        fd = (model.hamiltonian(i, p + h, m) - model.hamiltonian(i, p - h, m)) / (2 * h)
        grad_err = max(grad_err, abs(fd - model.grad_p(i, p, m)[0]))
    ok = value_err <= 1e-3 and grad_err <= 1e-6
    report(5, f"Legendre grid oracle {value_err:.2e} <= 1e-3, gradient FD {grad_err:.2e} <= 1e-6", ok)


def test_criterion_6_fixed_point_benchmark(benchmark_problem, two_node):
    result = gmfg.solve_mfg(benchmark_problem, scheme="damped_picard", omega=0.5, tol=1e-8, max_iter=200)
    verify200 = gmfg.verify_solution(benchmark_problem, result.u, result.m)
    problem400 = MfgProblem(
        two_node, benchmark_problem.model, benchmark_problem.m0, TimeGrid(1.0, 400)
    )
    result400 = gmfg.solve_mfg(problem400, scheme="damped_picard", omega=0.5, tol=1e-8, max_iter=200)
    verify400 = gmfg.verify_solution(problem400, result400.u, result400.m)
    shrink_hjb = verify200.hjb_residual / verify400.hjb_residual
    shrink_tr = verify200.transport_residual / verify400.transport_residual
    ok = (
        result.converged
        and result.iterations <= 200
        and result.residual_history[-1] <= 1e-8
        and verify200.hjb_residual <= 1e-3
        and verify200.transport_residual <= 1e-3
        and shrink_hjb >= 3.5
        and shrink_tr >= 3.5
    )
    report(
        6,
        f"benchmark converged in {result.iterations} iters, residuals "
        f"({verify200.hjb_residual:.2e}, {verify200.transport_residual:.2e}) <= 1e-3, "
        f"shrink x({shrink_hjb:.2f}, {shrink_tr:.2f}) >= 3.5",
        ok,
    )


def test_criterion_7_uniqueness_end_to_end(benchmark_problem):
    two, cert = two_solve_agreement(benchmark_problem, tol_agree=1e-5, seed=12345)
    ok = (
        cert.verdict == VERDICT_CERTIFIED
        and cert.f_monotone.satisfied
        and cert.g_monotone.satisfied
        and two.converged_a
        and two.converged_b
        and two.m_distance <= 1e-5
        and two.u_distance <= 1e-5
    )
    report(
        7,
        f"certified benchmark: two solves agree (m {two.m_distance:.2e}, u {two.u_distance:.2e}) <= 1e-5",
        ok,
    )


def test_criterion_8_block_matrix_structure(two_node, benchmark_model):
    cert = certify_psd(benchmark_model, two_node, n_samples=2000, seed=12345, horizon=1.0)
    from gmfg.config import load_config

    vio_cfg = load_config(VIOLATION)
    vio = certify_psd(
        vio_cfg.model, vio_cfg.graph, n_samples=2000, seed=12345, horizon=vio_cfg.horizon
    )
    ok = (
        cert.min_eig_overall >= -1e-9
        and cert.verdict == VERDICT_CERTIFIED
        and vio.verdict == VERDICT_VIOLATED
        and vio.witness_m is not None
        and vio.min_eig_overall < -1e-9
    )
    report(
        8,
        f"m-free family min eig {cert.min_eig_overall:.2e} >= -1e-9 on 2000 samples; "
        f"constructed instance violated with witness (min eig {vio.min_eig_overall:.2e})",
        ok,
    )


def test_criterion_9_rk4_self_convergence(two_node):
    # backward solver: linear-in-time density on the congestion family, no
    # positive-part crossing (terminal asymmetry keeps p strictly positive)
    model = gmfg.quadratic_congestion_family(
        two_node, alpha=1.0, beta=0.5, eps=0.1,
        f=gmfg.zero_coupling(), g=gmfg.constant_coupling([0.0, 2.0]),
    )
    a, b = np.array([0.9, 0.1]), np.array([0.1, 0.9])

    def solve_u(K):
        grid = TimeGrid(1.0, K)
        m_values = linear_path(grid, a, b).values
        terminal = np.array([model.g.fn(i, m_values[-1]) for i in range(2)])
        return hjb_values(two_node, model, m_values, grid, terminal)

    ref_u = solve_u(3200)
    errs_u = {K: float(np.max(np.abs(solve_u(K) - ref_u[:: 3200 // K]))) for K in (100, 200, 400)}
    orders_u = (np.log2(errs_u[100] / errs_u[200]), np.log2(errs_u[200] / errs_u[400]))

    rates = lambda t: np.array([1.0 + 0.5 * np.sin(2 * np.pi * t), 2.0 + 0.3 * np.cos(np.pi * t)])
    m0 = np.array([0.9, 0.1])
    ref_m = solve_transport(two_node, rates, m0, TimeGrid(1.0, 3200)).values
    errs_m = {
        K: float(np.max(np.abs(solve_transport(two_node, rates, m0, TimeGrid(1.0, K)).values - ref_m[:: 3200 // K])))
        for K in (100, 200, 400)
    }
    orders_m = (np.log2(errs_m[100] / errs_m[200]), np.log2(errs_m[200] / errs_m[400]))
    ok = min(orders_u) >= 3.5 and min(orders_m) >= 3.5
    report(
        9,
        f"observed orders: backward solver {orders_u[0]:.2f}/{orders_u[1]:.2f}, "
        f"transport {orders_m[0]:.2f}/{orders_m[1]:.2f} (all >= 3.5)",
        ok,
    )


def test_criterion_10_determinism(tmp_path, monkeypatch):
    blobs = []
    for run in ("a", "b"):
        monkeypatch.setenv("GMFG_OUT", str(tmp_path / f"solve_{run}"))
        assert main(["solve", BENCHMARK]) == 0
        monkeypatch.setenv("GMFG_OUT", str(tmp_path / f"uniq_{run}"))
        assert main(["check-uniqueness", BENCHMARK]) == 0
        payload = {}
        for name in ("m.csv", "u.csv", "rates.csv", "diagnostics.json"):
            payload[name] = (tmp_path / f"solve_{run}" / name).read_bytes()
        payload["uniqueness.json"] = (tmp_path / f"uniq_{run}" / "uniqueness.json").read_bytes()
        blobs.append(payload)
    ok = blobs[0] == blobs[1]
    report(10, "repeated solve and check-uniqueness runs are byte-identical", ok)
