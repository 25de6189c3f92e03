"""Fixed-point iteration on density paths and full-system verification.

One application of the map: solve the backward value equations against the
current density path, build the optimal rates from the resulting values and
the SAME density path (the transported density enters only linearly), and
integrate the transport forward from m0. Fixed points of that map are
solutions of the coupled forward-backward system.

The iteration is damped Picard by default, switching to running (Cesaro)
averaging of the map values when the residual stalls; the averaging variant
can also be requested outright. Non-convergence at max_iter is a reported
outcome, not an exception.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GmfgError
from .graph import Graph
from .hamiltonians import HamiltonianModel
from .hjb import HjbSolution, hjb_values, solve_hjb, _rhs_raw
from .trajectory import TimeGrid, Trajectory, constant_trajectory, sup_distance
from .transport import RateField, flow_rhs, solve_transport_mfg, _rates_raw

#: consecutive non-decreasing residuals tolerated before Picard falls back
#: to averaging
STALL_LIMIT = 10

SCHEMES = ("damped_picard", "cesaro")


@dataclass(frozen=True)
class MfgProblem:
    graph: Graph
    model: HamiltonianModel
    m0: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        if self.model.graph != self.graph:
            raise GmfgError("model was built for a different graph")
        m0 = np.asarray(self.m0, dtype=np.float64)
        if m0.shape != (self.graph.n_nodes,):
            raise GmfgError(
                f"m0 must have shape ({self.graph.n_nodes},), got {m0.shape}"
            )
        if np.min(m0) < 0.0 or abs(float(np.sum(m0)) - 1.0) > 1e-12:
            raise GmfgError(f"m0 must lie on the probability simplex, got {m0}")
        m0.setflags(write=False)
        object.__setattr__(self, "m0", m0)


@dataclass
class SolveResult:
    u: Trajectory
    m: Trajectory
    rates: RateField
    iterations: int
    residual_history: list[float]
    converged: bool
    scheme: str
    hjb: HjbSolution


@dataclass
class VerificationReport:
    """Central-difference residuals of the coupled system at interior nodes."""

    hjb_residual: float
    transport_residual: float
    check_tol: float

    @property
    def within_tol(self) -> bool:
        return (
            self.hjb_residual <= self.check_tol
            and self.transport_residual <= self.check_tol
        )


def _check_simplex_rows(values: np.ndarray, tol: float = 1e-9) -> None:
    sums = values.sum(axis=1)
    if np.min(values) < -tol or np.max(np.abs(sums - 1.0)) > tol:
        raise GmfgError("density path rows must lie on the simplex (within 1e-9)")


def theta_map(problem: MfgProblem, m_traj: Trajectory) -> Trajectory:
    """One application of the fixed-point map to a density path."""
    if m_traj.grid != problem.grid:
        raise GmfgError(f"grid mismatch: {m_traj.grid} vs {problem.grid}")
    _check_simplex_rows(m_traj.values)
    graph, model, grid = problem.graph, problem.model, problem.grid
    m_values = m_traj.values
    terminal = np.array(
        [model.g.fn(i, m_values[grid.steps]) for i in range(graph.n_nodes)]
    )
    u_values = hjb_values(graph, model, m_values, grid, terminal)
    m_new = solve_transport_mfg(graph, model, u_values, m_values, problem.m0, grid)
    return Trajectory(grid, m_new)


def solve_mfg(
    problem: MfgProblem,
    scheme: str = "damped_picard",
    omega: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 500,
    initial_m: Trajectory | None = None,
) -> SolveResult:
    """Iterate the fixed-point map from a density-path guess.

    damped_picard: m <- (1-omega) m + omega Theta(m); falls back to Cesaro
    averaging after STALL_LIMIT consecutive non-decreasing residuals.
    cesaro: m_{k+1} = (k m_k + Theta(m_k)) / (k+1).

    Stops when sup_distance(m, Theta(m)) <= tol. The returned m is always the
    last iterate whose residual was measured, so
    sup_distance(result.m, theta_map(result.m)) == residual_history[-1].
    The returned u is a full (bound-checked) backward solve against that m,
    and the rates are recomputed at the returned (u, m).
    """
    if scheme not in SCHEMES:
        raise GmfgError(f"unknown scheme '{scheme}', expected one of {SCHEMES}")
    if not (tol > 0.0):
        raise GmfgError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise GmfgError(f"max_iter must be >= 1, got {max_iter}")
    if not (0.0 < omega <= 1.0):
        raise GmfgError(f"omega must be in (0, 1], got {omega}")

    m = initial_m if initial_m is not None else constant_trajectory(problem.grid, problem.m0)
    active = scheme
    cesaro_k = 0
    stall = 0
    history: list[float] = []
    converged = False
    measured = m  # iterate matching history[-1]
    for _ in range(max_iter):
        theta_m = theta_map(problem, m)
        residual = sup_distance(m, theta_m)
        history.append(residual)
        measured = m
        if residual <= tol:
            converged = True
            break
        if active == "damped_picard":
            if len(history) >= 2 and history[-1] >= history[-2]:
                stall += 1
            else:
                stall = 0
            if stall >= STALL_LIMIT:
                active = "cesaro"
                cesaro_k = 0
        if active == "damped_picard":
            new_values = (1.0 - omega) * m.values + omega * theta_m.values
        else:
            new_values = (cesaro_k * m.values + theta_m.values) / (cesaro_k + 1)
            cesaro_k += 1
        m = Trajectory(problem.grid, new_values)
    return _finalize(problem, measured, history, converged, active)


def _finalize(problem, m_measured, history, converged, scheme):
    graph, model, grid = problem.graph, problem.model, problem.grid
    hjb = solve_hjb(graph, model, m_measured, grid)
    u_values = hjb.u.values
    rate_values = np.empty((grid.steps + 1, graph.n_edges))
    for k in range(grid.steps + 1):
        rate_values[k] = _rates_raw(graph, model, u_values[k], m_measured.values[k])
    rates = RateField(graph, grid, rate_values)
    return SolveResult(
        u=hjb.u,
        m=m_measured,
        rates=rates,
        iterations=len(history),
        residual_history=history,
        converged=converged,
        scheme=scheme,
        hjb=hjb,
    )


def verify_solution(
    problem: MfgProblem, u: Trajectory, m: Trajectory, check_tol: float = 1e-3
) -> VerificationReport:
    """Independent 2nd-order residual check of the coupled system.

    At interior grid nodes compares central-difference time derivatives with
    the equations' right-hand sides evaluated from the stored (u, m) rows.
    """
    graph, model, grid = problem.graph, problem.model, problem.grid
    if u.grid != grid or m.grid != grid:
        raise GmfgError("u and m must live on the problem grid")
    K, dt = grid.steps, grid.dt
    if K < 2:
        return VerificationReport(0.0, 0.0, check_tol)
    uv, mv = u.values, m.values
    worst_hjb = 0.0
    worst_transport = 0.0
    for k in range(1, K):
        dudt = (uv[k + 1] - uv[k - 1]) / (2.0 * dt)
        ham = -_rhs_raw(graph, model, uv[k], mv[k])
        worst_hjb = max(worst_hjb, float(np.max(np.abs(dudt + ham))))
        dmdt = (mv[k + 1] - mv[k - 1]) / (2.0 * dt)
        rhs = flow_rhs(graph, _rates_raw(graph, model, uv[k], mv[k]), mv[k])
        worst_transport = max(worst_transport, float(np.max(np.abs(dmdt - rhs))))
    return VerificationReport(worst_hjb, worst_transport, check_tol)
