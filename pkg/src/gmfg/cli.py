"""Command-line interface: solve, check-uniqueness, oracle, sweep.

Exit codes: 0 success (solve: converged; check-uniqueness: certified),
1 error, 2 solve hit max_iter without converging (outputs still written),
3 uniqueness violated, 4 uniqueness inconclusive. GMFG_OUT overrides the
config's output directory; GMFG_BACKEND=python|compiled pins the solver
backend. All emitted files are byte-stable for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import backend, oracles
from .config import RunConfig, load_config
from .errors import GmfgError
from .fixed_point import solve_mfg, verify_solution
from .graph import build_graph
from .trajectory import TimeGrid, write_csv
from .transport import RateField, solve_transport
from .uniqueness import (
    VERDICT_CERTIFIED,
    VERDICT_VIOLATED,
    UniquenessReport,
    certify_psd,
    two_solve_agreement,
)


def _out_dir(cfg: RunConfig) -> Path:
    return Path(os.environ.get("GMFG_OUT") or cfg.output_dir)


def _json_ready(obj):
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    return obj


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_json_ready(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rates_csv(path: Path, rates: RateField) -> None:
    times = rates.grid.times()
    src = rates.graph.edge_src
    dst = rates.graph.edge_dst
    with open(path, "w", newline="") as fh:
        fh.write("t,source,target,rate\n")
        for k in range(rates.grid.steps + 1):
            t_txt = format(times[k], ".17g")
            for e in range(rates.graph.n_edges):
                fh.write(
                    f"{t_txt},{src[e] + 1},{dst[e] + 1},"
                    f"{format(rates.values[k, e], '.17g')}\n"
                )


def _solve_into_dir(cfg: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    result = solve_mfg(
        problem,
        scheme=cfg.solver.scheme,
        omega=cfg.solver.omega,
        tol=cfg.solver.tol,
        max_iter=cfg.solver.max_iter,
    )
    verify = verify_solution(problem, result.u, result.m)
    write_csv(result.m, str(out_dir / "m.csv"))
    write_csv(result.u, str(out_dir / "u.csv"))
    _write_rates_csv(out_dir / "rates.csv", result.rates)
    _write_json(
        out_dir / "diagnostics.json",
        {
            "converged": result.converged,
            "iterations": result.iterations,
            "scheme": result.scheme,
            "final_residual": result.residual_history[-1],
            "residual_history": result.residual_history,
            "tol": cfg.solver.tol,
            "verify": {
                "hjb_residual": verify.hjb_residual,
                "transport_residual": verify.transport_residual,
                "check_tol": verify.check_tol,
                "within_tol": verify.within_tol,
            },
            "a_priori": {
                "bound": result.hjb.a_priori_bound,
                "max_abs_u": result.hjb.max_abs_u,
                "satisfied": result.hjb.bound_ok,
            },
            "grid": {"horizon": cfg.horizon, "steps": cfg.steps},
            "backend": backend.active_backend(cfg.model),
        },
    )
    return 0 if result.converged else 2


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    return _solve_into_dir(cfg, _out_dir(cfg))


def _monotone_payload(rec) -> dict:
    return {
        "n_pairs": rec.n_pairs,
        "min_pairing": rec.min_pairing if np.isfinite(rec.min_pairing) else None,
        "max_pairing": rec.max_pairing if np.isfinite(rec.max_pairing) else None,
        "worst_pair": None
        if rec.worst_pair is None
        else {"m": rec.worst_pair[0], "mu": rec.worst_pair[1]},
        "mono_tol": rec.mono_tol,
        "satisfied": rec.satisfied,
    }


def _uniqueness_payload(report: UniquenessReport) -> dict:
    return {
        "verdict": report.verdict,
        "n_samples": report.n_samples,
        "min_eigenvalue": report.min_eig_overall,
        "witness": None
        if report.witness_m is None
        else {"q": [list(q) for q in report.witness_q], "m": report.witness_m},
        "skipped_kink_samples": report.skipped_kink_samples,
        "psd_tol": report.psd_tol,
        "q_max": report.q_max,
        "f_monotone": _monotone_payload(report.f_monotone),
        "g_monotone": _monotone_payload(report.g_monotone),
    }


def cmd_check_uniqueness(args) -> int:
    cfg = load_config(args.config)
    out_dir = _out_dir(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    uniq = cfg.uniqueness
    report = certify_psd(
        cfg.model,
        cfg.graph,
        n_samples=uniq.n_samples,
        n_pairs=uniq.n_pairs,
        seed=cfg.seed,
        q_max=uniq.q_max,
        horizon=cfg.horizon,
        psd_tol=uniq.psd_tol,
        mono_tol=uniq.mono_tol,
    )
    payload = _uniqueness_payload(report)
    if args.two_solve:
        two, _ = two_solve_agreement(
            cfg.problem(),
            tol_agree=uniq.tol_agree,
            scheme=cfg.solver.scheme,
            omega=cfg.solver.omega,
            tol=cfg.solver.tol,
            max_iter=cfg.solver.max_iter,
            n_samples=uniq.n_samples,
            n_pairs=uniq.n_pairs,
            seed=cfg.seed,
            psd_tol=uniq.psd_tol,
        )
        payload["two_solve"] = {
            "criterion_satisfied": two.criterion_satisfied,
            "converged_a": two.converged_a,
            "converged_b": two.converged_b,
            "m_distance": two.m_distance,
            "u_distance": two.u_distance,
            "tol_agree": two.tol_agree,
            "agreement_ok": two.agreement_ok,
        }
    else:
        payload["two_solve"] = None
    _write_json(out_dir / "uniqueness.json", payload)
    if report.verdict == VERDICT_CERTIFIED:
        return 0
    if report.verdict == VERDICT_VIOLATED:
        return 3
    return 4


# -- oracle sweeps -------------------------------------------------------------


def _print_table(rows: list[tuple[str, int, float, float]]) -> bool:
    print(f"{'check':<34}{'n':>6}{'max_err':>14}{'tol':>12}  status")
    ok = True
    for name, n, err, tol in rows:
        status = "PASS" if err <= tol else "FAIL"
        ok = ok and err <= tol
        print(f"{name:<34}{n:>6}{err:>14.3e}{tol:>12.1e}  {status}")
    return ok


def _lambda_box(model, i, p, m) -> float:
    rates = model.grad_p(i, p, m)
    top = float(np.max(rates)) if rates.size else 0.0
    return max(5.0, 2.0 * top + 1.0)


def _oracle_legendre(cfg: RunConfig) -> list[tuple[str, int, float, float]]:
    model, graph = cfg.model, cfg.graph
    if model.lagrangian is None:
        raise GmfgError(
            f"family '{model.name}' has no closed-form running cost; "
            "the Legendre oracle needs one"
        )
    rng = np.random.default_rng(cfg.seed)
    nodes = [i for i in range(graph.n_nodes) if graph.out_degree[i] > 0]
    if not nodes:
        return []
    n_samples = 100
    value_err = 0.0
    grad_err = 0.0
    for _ in range(n_samples):
        i = int(rng.choice(nodes))
        d = graph.out_degree[i]
        p = rng.uniform(-2.0, 2.0, size=d)
        while np.min(np.abs(p)) < 1e-2:  # stay off the gradient kink
            p = rng.uniform(-2.0, 2.0, size=d)
        m = rng.dirichlet(np.ones(graph.n_nodes))
        lam_max = _lambda_box(model, i, p, m)
        ref = oracles.brute_force_legendre(
            lambda lam, mm: model.lagrangian(i, lam, mm), p, m, lam_max, 1000
        )
        value_err = max(value_err, abs(model.hamiltonian(i, p, m) - ref))
        grad = model.grad_p(i, p, m)
        for j in range(d):
            h = 1e-5
            hi, lo = p.copy(), p.copy()
            hi[j] += h
            lo[j] -= h
            fd = (model.hamiltonian(i, hi, m) - model.hamiltonian(i, lo, m)) / (2 * h)
            grad_err = max(grad_err, abs(fd - grad[j]))
    return [
        ("legendre_value_vs_grid", n_samples, value_err, 1e-3),
        ("gradient_vs_central_diff", n_samples, grad_err, 1e-6),
    ]


def _oracle_two_node_transport(cfg: RunConfig) -> list[tuple[str, int, float, float]]:
    g2 = build_graph(2, [(1, 2), (2, 1)])
    grid = TimeGrid(1.0, 200)
    cases = [("constant_rates_a1_b2", 1.0, 2.0, 1.0), ("stationary_a_eq_b", 1.5, 1.5, 0.5)]
    rows = []
    for name, a, b, m1_0 in cases:
        rates = np.array([a, b])
        traj = solve_transport(g2, lambda t: rates, np.array([m1_0, 1.0 - m1_0]), grid)
        err = 0.0
        for k, t in enumerate(grid.times()):
            err = max(err, abs(traj.values[k, 0] - oracles.closed_form_two_node(a, b, m1_0, t)))
        rows.append((name, grid.steps + 1, err, 1e-8))
    return rows


def _oracle_best_response(cfg: RunConfig) -> list[tuple[str, int, float, float]]:
    model, graph = cfg.model, cfg.graph
    if model.lagrangian is None:
        raise GmfgError(
            f"family '{model.name}' has no closed-form running cost; "
            "the best-response oracle needs one"
        )
    if graph.n_edges == 0:
        return []
    rng = np.random.default_rng(cfg.seed)
    n_samples = 5
    worst = 0.0
    for _ in range(n_samples):
        u = rng.uniform(-1.0, 1.0, size=graph.n_nodes)
        m = rng.dirichlet(np.ones(graph.n_nodes))
        lam_max = max(
            _lambda_box(model, i, u[graph.nbr_arrays[i]] - u[i], m)
            for i in range(graph.n_nodes)
            if graph.out_degree[i] > 0
        )
        sub = oracles.best_response_check(model, graph, u, m, lam_max, 1000)
        worst = max(worst, sub)
    return [("solved_rates_suboptimality", n_samples, worst, 1e-3)]


ORACLES = {
    "legendre": _oracle_legendre,
    "two_node_transport": _oracle_two_node_transport,
    "best_response": _oracle_best_response,
}


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    runner = ORACLES.get(args.name)
    if runner is None:
        print(
            f"error: unknown oracle '{args.name}' (known: {', '.join(sorted(ORACLES))})",
            file=sys.stderr,
        )
        return 1
    rows = runner(cfg)
    ok = _print_table(rows)
    return 0 if ok else 1


# -- parameter sweep -----------------------------------------------------------


def _set_path(data: dict, path: str, value) -> None:
    parts = path.split(".")
    cur = data
    for part in parts[:-1]:
        nxt = cur.get(part)
        if nxt is None:
            nxt = cur[part] = {}
        if not isinstance(nxt, dict):
            raise GmfgError(f"parameter path '{path}' does not address a field")
        cur = nxt
    cur[parts[-1]] = value


def cmd_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    base_cfg = load_config(args.config)  # validate before any run
    out_root = _out_dir(base_cfg)
    out_root.mkdir(parents=True, exist_ok=True)
    values = [v for v in args.values.split(",") if v.strip()]
    param_slug = args.param.replace(".", "_")
    rows = []
    from .config import parse_config

    for text in values:
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            print(f"error: sweep value '{text}' is not a JSON scalar", file=sys.stderr)
            return 1
        variant = json.loads(json.dumps(raw))
        _set_path(variant, args.param, value)
        cfg = parse_config(variant)  # unknown paths surface here as ConfigError
        run_dir = out_root / f"sweep_{param_slug}_{text.strip()}"
        code = _solve_into_dir(cfg, run_dir)
        if code == 1:
            return 1
        with open(run_dir / "diagnostics.json") as fh:
            diag = json.load(fh)
        rows.append((text.strip(), diag["converged"], diag["iterations"], diag["final_residual"]))
    with open(out_root / "sweep_summary.csv", "w", newline="") as fh:
        fh.write("value,converged,iterations,final_residual\n")
        for value, converged, iters, res in rows:
            fh.write(f"{value},{str(converged).lower()},{iters},{format(res, '.17g')}\n")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmfg",
        description="Graph mean field games: solve the coupled system, "
        "certify uniqueness, run reference oracles, sweep parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the coupled system from a JSON config")
    p_solve.add_argument("config")
    p_solve.set_defaults(func=cmd_solve)

    p_check = sub.add_parser("check-uniqueness", help="run the uniqueness certification")
    p_check.add_argument("config")
    p_check.add_argument(
        "--two-solve",
        action="store_true",
        help="also solve from two initial guesses and report their distance",
    )
    p_check.set_defaults(func=cmd_check_uniqueness)

    p_oracle = sub.add_parser("oracle", help="run a reference-oracle sweep")
    p_oracle.add_argument("config")
    p_oracle.add_argument("name", help=f"one of: {', '.join(sorted(ORACLES))}")
    p_oracle.set_defaults(func=cmd_oracle)

    p_sweep = sub.add_parser("sweep", help="re-solve over a list of parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="dotted config path, e.g. solver.omega")
    p_sweep.add_argument("--values", required=True, help="comma-separated JSON scalars")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GmfgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
