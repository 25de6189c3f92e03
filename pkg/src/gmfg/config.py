"""JSON run configuration: parsing, validation, and problem assembly.

Schema (version 1); unknown keys anywhere are rejected so typos surface as
errors instead of silently running defaults:

{
  "schema": 1,
  "graph": {"n": 2, "edges": [[1, 2], [2, 1]]},          # 1-based labels
  "hamiltonian": {
    "family": "quadratic_congestion",                     # or "cross_coupling"
    "alpha": 0.0, "beta": 0.0, "eps": 0.01,               # family parameters
    "s": 1.0,                                             # cross_coupling only
    "f": {"kind": "logit", "kappa": 1.0, "eps": 0.01},    # population coupling
    "g": {"kind": "zero"}                                 # terminal payoff
  },
  "horizon": 1.0,
  "steps": 200,
  "m0": "uniform",                                        # or explicit vector
  "solver": {"scheme": "damped_picard", "omega": 0.5, "tol": 1e-8, "max_iter": 500},
  "uniqueness": {"n_samples": 2000, "n_pairs": 500, "psd_tol": 1e-9,
                 "mono_tol": 1e-12, "q_max": null, "tol_agree": 1e-5},
  "output_dir": "out",
  "seed": 0
}

Coupling kinds: "zero"; "constant" {"values": [...]}; "logit" {"kappa", "eps"};
"linear" {"coeffs": [...]}. m0 is validated to sum to 1 within 1e-9 and then
renormalized exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ConfigError, GmfgError
from .fixed_point import SCHEMES, MfgProblem
from .graph import Graph, build_graph
from .hamiltonians import (
    Coupling,
    HamiltonianModel,
    constant_coupling,
    cross_coupling_family,
    linear_coupling,
    logit_coupling,
    quadratic_congestion_family,
    zero_coupling,
)
from .trajectory import TimeGrid


@dataclass
class SolverOptions:
    scheme: str = "damped_picard"
    omega: float = 0.5
    tol: float = 1e-8
    max_iter: int = 500


@dataclass
class UniquenessOptions:
    n_samples: int = 2000
    n_pairs: int = 500
    psd_tol: float = 1e-9
    mono_tol: float = 1e-12
    q_max: float | None = None
    tol_agree: float = 1e-5


@dataclass
class RunConfig:
    graph: Graph
    model: HamiltonianModel
    horizon: float
    steps: int
    m0: np.ndarray
    solver: SolverOptions
    uniqueness: UniquenessOptions
    output_dir: str
    seed: int

    def problem(self) -> MfgProblem:
        return MfgProblem(self.graph, self.model, self.m0, TimeGrid(self.horizon, self.steps))


def _require(data: dict, field: str, path: str) -> Any:
    if field not in data:
        raise ConfigError(f"{path}{field}", "missing required field")
    return data[field]


def _reject_unknown(data: dict, allowed: set[str], path: str) -> None:
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{path}{key}", "unknown field")


def _number(data: dict, field: str, path: str, default=None, minimum=None,
            strict_min=None, integer=False):
    if field not in data:
        if default is None:
            raise ConfigError(f"{path}{field}", "missing required field")
        return default
    value = data[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}{field}", f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(f"{path}{field}", f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}{field}", f"must be >= {minimum}, got {value}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(f"{path}{field}", f"must be > {strict_min}, got {value}")
    return value


def _parse_coupling(data: Any, n: int, path: str) -> Coupling:
    if not isinstance(data, dict):
        raise ConfigError(path.rstrip("."), "coupling must be an object with a 'kind'")
    kind = _require(data, "kind", path)
    if kind == "zero":
        _reject_unknown(data, {"kind"}, path)
        return zero_coupling()
    if kind == "constant":
        _reject_unknown(data, {"kind", "values"}, path)
        values = _require(data, "values", path)
        if not isinstance(values, list) or len(values) != n:
            raise ConfigError(f"{path}values", f"expected {n} per-node values")
        return constant_coupling(values)
    if kind == "logit":
        _reject_unknown(data, {"kind", "kappa", "eps"}, path)
        kappa = _number(data, "kappa", path, default=1.0)
        eps = _number(data, "eps", path, default=1e-2, minimum=0.0)
        return logit_coupling(kappa, eps)
    if kind == "linear":
        _reject_unknown(data, {"kind", "coeffs"}, path)
        coeffs = _require(data, "coeffs", path)
        if not isinstance(coeffs, list) or len(coeffs) != n:
            raise ConfigError(f"{path}coeffs", f"expected {n} per-node coefficients")
        return linear_coupling(coeffs)
    raise ConfigError(f"{path}kind", f"unknown coupling kind '{kind}'")


def _parse_graph(data: Any) -> Graph:
    if not isinstance(data, dict):
        raise ConfigError("graph", "must be an object")
    _reject_unknown(data, {"n", "edges"}, "graph.")
    n = _number(data, "n", "graph.", integer=True, minimum=1)
    edges = _require(data, "edges", "graph.")
    if not isinstance(edges, list):
        raise ConfigError("graph.edges", "must be a list of [source, target] pairs")
    pairs = []
    for idx, pair in enumerate(edges):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"graph.edges[{idx}]", "must be a [source, target] pair")
        pairs.append((pair[0], pair[1]))
    try:
        return build_graph(n, pairs)
    except GmfgError as exc:
        raise ConfigError("graph.edges", str(exc)) from exc


def _parse_hamiltonian(data: Any, graph: Graph) -> HamiltonianModel:
    if not isinstance(data, dict):
        raise ConfigError("hamiltonian", "must be an object")
    family = _require(data, "family", "hamiltonian.")
    f = _parse_coupling(data.get("f", {"kind": "zero"}), graph.n_nodes, "hamiltonian.f.")
    g = _parse_coupling(data.get("g", {"kind": "zero"}), graph.n_nodes, "hamiltonian.g.")
    if family == "quadratic_congestion":
        _reject_unknown(data, {"family", "alpha", "beta", "eps", "f", "g"}, "hamiltonian.")
        alpha = _number(data, "alpha", "hamiltonian.", default=0.0, minimum=0.0)
        beta = _number(data, "beta", "hamiltonian.", default=0.0, minimum=0.0)
        eps = _number(data, "eps", "hamiltonian.", default=1e-2, strict_min=0.0)
        return quadratic_congestion_family(graph, alpha, beta, eps, f=f, g=g)
    if family == "cross_coupling":
        _reject_unknown(data, {"family", "s", "f", "g"}, "hamiltonian.")
        s = _number(data, "s", "hamiltonian.", default=1.0, minimum=0.0)
        return cross_coupling_family(graph, s, f=f, g=g)
    raise ConfigError("hamiltonian.family", f"unknown family '{family}'")


def _parse_m0(data: Any, n: int) -> np.ndarray:
    if data == "uniform":
        return np.full(n, 1.0 / n)
    if not isinstance(data, list) or len(data) != n:
        raise ConfigError("m0", f"expected 'uniform' or a vector of {n} masses")
    m0 = np.asarray(data, dtype=np.float64)
    if np.min(m0) < 0.0:
        raise ConfigError("m0", f"masses must be nonnegative, got {data}")
    total = float(np.sum(m0))
    if abs(total - 1.0) > 1e-9:
        raise ConfigError("m0", f"must sum to 1 within 1e-9, got sum {total}")
    return m0 / total


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("", "top-level config must be an object")
    _reject_unknown(
        data,
        {"schema", "graph", "hamiltonian", "horizon", "steps", "m0", "solver",
         "uniqueness", "output_dir", "seed"},
        "",
    )
    schema = _require(data, "schema", "")
    if schema != 1:
        raise ConfigError("schema", f"unsupported schema version {schema!r}")
    graph = _parse_graph(_require(data, "graph", ""))
    model = _parse_hamiltonian(_require(data, "hamiltonian", ""), graph)
    horizon = _number(data, "horizon", "", strict_min=0.0)
    steps = _number(data, "steps", "", integer=True, minimum=1)
    m0 = _parse_m0(data.get("m0", "uniform"), graph.n_nodes)

    solver_data = data.get("solver", {})
    if not isinstance(solver_data, dict):
        raise ConfigError("solver", "must be an object")
    _reject_unknown(solver_data, {"scheme", "omega", "tol", "max_iter"}, "solver.")
    scheme = solver_data.get("scheme", "damped_picard")
    if scheme not in SCHEMES:
        raise ConfigError("solver.scheme", f"expected one of {SCHEMES}, got '{scheme}'")
    solver = SolverOptions(
        scheme=scheme,
        omega=_number(solver_data, "omega", "solver.", default=0.5, strict_min=0.0),
        tol=_number(solver_data, "tol", "solver.", default=1e-8, strict_min=0.0),
        max_iter=_number(solver_data, "max_iter", "solver.", default=500, integer=True, minimum=1),
    )
    if solver.omega > 1.0:
        raise ConfigError("solver.omega", f"must be in (0, 1], got {solver.omega}")

    uniq_data = data.get("uniqueness", {})
    if not isinstance(uniq_data, dict):
        raise ConfigError("uniqueness", "must be an object")
    _reject_unknown(
        uniq_data,
        {"n_samples", "n_pairs", "psd_tol", "mono_tol", "q_max", "tol_agree"},
        "uniqueness.",
    )
    q_max = uniq_data.get("q_max")
    if q_max is not None:
        q_max = _number(uniq_data, "q_max", "uniqueness.", strict_min=0.0)
    uniqueness = UniquenessOptions(
        n_samples=_number(uniq_data, "n_samples", "uniqueness.", default=2000, integer=True, minimum=0),
        n_pairs=_number(uniq_data, "n_pairs", "uniqueness.", default=500, integer=True, minimum=0),
        psd_tol=_number(uniq_data, "psd_tol", "uniqueness.", default=1e-9, minimum=0.0),
        mono_tol=_number(uniq_data, "mono_tol", "uniqueness.", default=1e-12, minimum=0.0),
        q_max=q_max,
        tol_agree=_number(uniq_data, "tol_agree", "uniqueness.", default=1e-5, strict_min=0.0),
    )

    output_dir = data.get("output_dir", "out")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "must be a nonempty string")
    seed = _number(data, "seed", "", default=0, integer=True, minimum=0)
    return RunConfig(
        graph=graph,
        model=model,
        horizon=horizon,
        steps=steps,
        m0=m0,
        solver=solver,
        uniqueness=uniqueness,
        output_dir=output_dir,
        seed=seed,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in '{path}' at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(data)
