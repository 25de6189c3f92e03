"""Backward Hamilton-Jacobi half of the graph MFG system.

For a frozen density path m(.), integrates du_i/dt = -H(i, (u_j - u_i)_j, m(t))
backward from u(T, i) = g(i, m(T)) with classical RK4, one step per grid
interval, the density interpolated linearly at stage times. The density path
is understood as the piecewise-linear interpolant of its rows, so each step
integrates a smooth right-hand side and keeps 4th order.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import BlowupError, DomainError, GmfgError
from .graph import Graph
from .hamiltonians import HamiltonianModel
from .sampling import bound_estimation_sample
from .trajectory import TimeGrid, Trajectory

#: slack added to the sampled a priori bound before flagging a violation
BOUND_SLACK = 1e-6


@dataclass
class HjbSolution:
    """Backward solve output plus the a priori bound diagnostic.

    residual_norm is the max over interior grid nodes and coordinates of the
    central-difference ODE residual |du/dt + H| (2nd-order check, dominated
    by the differencing truncation, not the solver).
    """

    u: Trajectory
    terminal: np.ndarray
    residual_norm: float
    a_priori_bound: float
    max_abs_u: float
    bound_ok: bool


def hjb_rhs(
    graph: Graph, model: HamiltonianModel, t: float, u_vec: np.ndarray, m_vec
) -> np.ndarray:
    """Right-hand side of du/dt: component i is -H(i, (u_j - u_i)_j, m)."""
    m_vec = model.check_domain(m_vec)
    u_vec = np.asarray(u_vec, dtype=np.float64)
    if not np.all(np.isfinite(u_vec)):
        raise GmfgError("u must be finite")
    return _rhs_raw(graph, model, u_vec, m_vec)


def _rhs_raw(graph, model, u_vec, m_vec):
    out = np.empty(graph.n_nodes)
    h_c, f = model.h_c, model.f.fn
    for i in range(graph.n_nodes):
        nbrs = graph.nbr_arrays[i]
        p = u_vec[nbrs] - u_vec[i]
        out[i] = -(h_c(i, p, m_vec) + f(i, m_vec))
    return out


def _hjb_sweep_python(graph, model, m_values, grid, terminal):
    K, n = grid.steps, graph.n_nodes
    dt = grid.dt
    h = -dt
    u = np.empty((K + 1, n))
    u[K] = terminal
    for k in range(K, 0, -1):
        m_hi = m_values[k]
        m_lo = m_values[k - 1]
        m_mid = 0.5 * (m_hi + m_lo)
        y = u[k]
        k1 = _rhs_raw(graph, model, y, m_hi)
        k2 = _rhs_raw(graph, model, y + (0.5 * h) * k1, m_mid)
        k3 = _rhs_raw(graph, model, y + (0.5 * h) * k2, m_mid)
        k4 = _rhs_raw(graph, model, y + h * k3, m_lo)
        nxt = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(nxt)):
            t_fail = (k - 1) * dt
            raise BlowupError(f"HJB integration blew up at t={t_fail}", t=t_fail)
        u[k - 1] = nxt
    return u


def hjb_values(
    graph: Graph,
    model: HamiltonianModel,
    m_values: np.ndarray,
    grid: TimeGrid,
    terminal: np.ndarray,
) -> np.ndarray:
    """Raw backward sweep used by the fixed-point loop; picks the backend."""
    if backend.use_compiled(model):
        kp = model.kernel_params
        u, status, t_fail = backend.kernels.hjb_sweep(
            graph.edge_dst,
            graph.edge_offset,
            np.ascontiguousarray(m_values),
            np.ascontiguousarray(terminal),
            grid.horizon,
            kp.alpha,
            kp.beta,
            kp.eps,
            kp.f_kind,
            kp.f_kappa,
            kp.f_eps,
            kp.f_vec,
        )
        if status != 0:
            raise BlowupError(f"HJB integration blew up at t={t_fail}", t=t_fail)
        return u
    return _hjb_sweep_python(graph, model, m_values, grid, terminal)


@functools.lru_cache(maxsize=128)
def _sup_estimates(model: HamiltonianModel) -> tuple[float, float]:
    """Sampled sup_i sup_m |g(i,m)| and sup_i sup_m |H(i,0,m)| over P_N.

    Estimated on the fixed unscrambled 1000-point Halton simplex sample plus
    the vertices; sample points outside the model's evaluable neighborhood
    are skipped.
    """
    graph = model.graph
    pts = bound_estimation_sample(graph.n_nodes)
    sup_g = 0.0
    sup_h0 = 0.0
    usable = 0
    for m in pts:
        try:
            model.check_domain(m)
        except DomainError:
            continue
        usable += 1
        for i in range(graph.n_nodes):
            zero_p = np.zeros(graph.out_degree[i])
            sup_g = max(sup_g, abs(model.g.fn(i, m)))
            sup_h0 = max(sup_h0, abs(model.h_c(i, zero_p, m) + model.f.fn(i, m)))
    if usable == 0:
        raise GmfgError("no simplex sample point is evaluable for this model")
    return sup_g, sup_h0


def a_priori_bound(model: HamiltonianModel, horizon: float) -> float:
    """Sampled estimate of sup|g| + T * sup|H(i,0,m)| over the simplex."""
    sup_g, sup_h0 = _sup_estimates(model)
    return sup_g + horizon * sup_h0


def solve_hjb(
    graph: Graph,
    model: HamiltonianModel,
    m_traj: Trajectory,
    grid: TimeGrid | None = None,
) -> HjbSolution:
    """Backward RK4 solve against the density path m_traj.

    The returned solution carries the a priori bound check: max |u| must not
    exceed the sampled sup|g| + T*sup|H(i,0,m)| estimate by more than
    BOUND_SLACK on any healthy solve.
    """
    if grid is None:
        grid = m_traj.grid
    elif grid != m_traj.grid:
        raise GmfgError(f"grid mismatch: {grid} vs {m_traj.grid}")
    if model.graph != graph:
        raise GmfgError("model was built for a different graph")
    m_values = m_traj.values
    if m_values.shape[1] != graph.n_nodes:
        raise GmfgError("density path has the wrong coordinate count")
    if model.eps_boundary != math.inf and not np.all(m_values > -model.eps_boundary):
        raise DomainError("density path leaves the model's evaluable neighborhood")

    terminal = np.array(
        [model.g.fn(i, m_values[grid.steps]) for i in range(graph.n_nodes)]
    )
    u_values = hjb_values(graph, model, m_values, grid, terminal)

    bound = a_priori_bound(model, grid.horizon)
    max_abs_u = float(np.max(np.abs(u_values)))
    residual = _ode_residual(graph, model, u_values, m_values, grid)
    return HjbSolution(
        u=Trajectory(grid, u_values),
        terminal=terminal,
        residual_norm=residual,
        a_priori_bound=bound,
        max_abs_u=max_abs_u,
        bound_ok=max_abs_u <= bound + BOUND_SLACK,
    )


def _ode_residual(graph, model, u_values, m_values, grid):
    K = grid.steps
    if K < 2:
        return 0.0
    dudt = (u_values[2:] - u_values[:-2]) / (2.0 * grid.dt)
    worst = 0.0
    for k in range(1, K):
        ham = -_rhs_raw(graph, model, u_values[k], m_values[k])
        worst = max(worst, float(np.max(np.abs(dudt[k - 1] + ham))))
    return worst
