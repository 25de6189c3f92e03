"""Forward transport of the population density along optimal rates.

Integrates dm_i/dt = sum_{j -> i} rate_ji * m_j - sum_{i -> j} rate_ij * m_i
forward from a simplex point with classical RK4. Mass is conserved exactly
by the flow form (each flow leaves one node and enters another) and RK4
preserves that linear invariant to roundoff. Positivity is protected by
local step halving (up to MAX_HALVINGS times per interval); remaining
negatives in [-POS_TOL, 0) are clamped to zero and the row renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .errors import BlowupError, GmfgError, PositivityError
from .graph import Graph
from .hamiltonians import HamiltonianModel
from .trajectory import TimeGrid, Trajectory

#: most negative density component tolerated without substepping
POS_TOL = 1e-9
#: local step halvings attempted before giving up
MAX_HALVINGS = 6
#: allowed deviation of sum(m0) from 1
MASS_TOL = 1e-12


@dataclass
class RateField:
    """Per-edge nonnegative rates on a time grid, global edge order."""

    graph: Graph
    grid: TimeGrid
    values: np.ndarray  # (K+1, E)

    def at_edge(self, k: int, i: int, j: int) -> float:
        from .graph import global_edge_index

        return float(self.values[k, global_edge_index(self.graph, i, j)])


def rates_from_u(
    graph: Graph, model: HamiltonianModel, u_vec: np.ndarray, m_vec
) -> np.ndarray:
    """Optimal rates on every edge: slot k of node i holds the p-gradient
    component for edge (i, out_adj[i][k]). Flat array in global edge order."""
    m_vec = model.check_domain(m_vec)
    u_vec = np.asarray(u_vec, dtype=np.float64)
    if not np.all(np.isfinite(u_vec)):
        raise GmfgError("u must be finite")
    return _rates_raw(graph, model, u_vec, m_vec)


def _rates_raw(graph, model, u_vec, m_vec):
    out = np.empty(graph.n_edges)
    off = graph.edge_offset
    grad = model.grad_fn
    for i in range(graph.n_nodes):
        nbrs = graph.nbr_arrays[i]
        if nbrs.size == 0:
            continue
        p = u_vec[nbrs] - u_vec[i]
        if grad is not None:
            out[off[i] : off[i + 1]] = grad(i, p, m_vec)
        else:
            out[off[i] : off[i + 1]] = model.grad_p(i, p, m_vec)
    return out


def flow_rhs(graph: Graph, rates: np.ndarray, y: np.ndarray) -> np.ndarray:
    """dm/dt for a frozen rate field: out-flows then in-flows per edge."""
    dm = np.zeros(graph.n_nodes)
    flows = rates * y[graph.edge_src]
    np.subtract.at(dm, graph.edge_src, flows)
    np.add.at(dm, graph.edge_dst, flows)
    return dm


def _integrate_interval(graph, rate_provider, y, t0, dt, n_sub):
    hs = dt / n_sub
    for s in range(n_sub):
        ts = t0 + s * hs
        r1 = rate_provider(ts)
        k1 = flow_rhs(graph, r1, y)
        r_mid = rate_provider(ts + 0.5 * hs)
        k2 = flow_rhs(graph, r_mid, y + (0.5 * hs) * k1)
        k3 = flow_rhs(graph, r_mid, y + (0.5 * hs) * k2)
        r4 = rate_provider(ts + hs)
        k4 = flow_rhs(graph, r4, y + hs * k3)
        y = y + (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def _validate_m0(m0, n: int) -> np.ndarray:
    m0 = np.asarray(m0, dtype=np.float64)
    if m0.shape != (n,):
        raise GmfgError(f"m0 must have shape ({n},), got {m0.shape}")
    if np.min(m0) < 0.0:
        raise GmfgError(f"m0 must be nonnegative, got {m0}")
    if abs(float(np.sum(m0)) - 1.0) > MASS_TOL:
        raise GmfgError(f"m0 must sum to 1 within {MASS_TOL}, got sum {np.sum(m0)!r}")
    return m0


def _clean_row(y: np.ndarray) -> np.ndarray:
    neg = y < 0.0
    if np.any(neg):
        y = y.copy()
        y[neg] = 0.0
        y /= np.sum(y)
    return y


def solve_transport(
    graph: Graph,
    rate_provider: Callable[[float], np.ndarray],
    m0,
    grid: TimeGrid,
) -> Trajectory:
    """Forward RK4 integration with rates queried at every stage time.

    rate_provider(t) must return the full per-edge rate array (global edge
    order). Intervals whose step dips a component below -POS_TOL rerun with
    halved local steps; persistent violations abort with PositivityError.
    """
    m0 = _validate_m0(m0, graph.n_nodes)
    K, dt = grid.steps, grid.dt
    out = np.empty((K + 1, graph.n_nodes))
    out[0] = m0
    y = m0.copy()
    for k in range(K):
        t0 = k * dt
        accepted = None
        n_sub = 1
        for _ in range(MAX_HALVINGS + 1):
            cand = _integrate_interval(graph, rate_provider, y, t0, dt, n_sub)
            if not np.all(np.isfinite(cand)):
                raise BlowupError(f"transport blew up at t={t0 + dt}", t=t0 + dt)
            if float(np.min(cand)) >= -POS_TOL:
                accepted = cand
                break
            n_sub *= 2
        if accepted is None:
            worst = float(np.min(cand))
            raise PositivityError(
                f"density stayed below -{POS_TOL} at t={t0 + dt} "
                f"(worst {worst}) after {MAX_HALVINGS} halvings",
                t=t0 + dt,
                worst=worst,
            )
        y = _clean_row(accepted)
        out[k + 1] = y
    return Trajectory(grid, out)


def solve_transport_mfg(
    graph: Graph,
    model: HamiltonianModel,
    u_values: np.ndarray,
    m_coef_values: np.ndarray,
    m0,
    grid: TimeGrid,
) -> np.ndarray:
    """Transport sweep of the fixed-point map: rates from the value path u
    and the coefficient density path m_coef (both linearly interpolated at
    stage times), the evolving density entering only linearly."""
    m0 = _validate_m0(m0, graph.n_nodes)
    if backend.use_compiled(model):
        kp = model.kernel_params
        m_out, status, t_fail, worst = backend.kernels.transport_sweep(
            graph.edge_src,
            graph.edge_dst,
            np.ascontiguousarray(u_values),
            np.ascontiguousarray(m_coef_values),
            np.ascontiguousarray(m0),
            grid.horizon,
            kp.alpha,
            kp.beta,
            kp.eps,
            POS_TOL,
            MAX_HALVINGS,
        )
        if status == 1:
            raise PositivityError(
                f"density stayed below -{POS_TOL} at t={t_fail} "
                f"(worst {worst}) after {MAX_HALVINGS} halvings",
                t=t_fail,
                worst=worst,
            )
        if status == 2:
            raise BlowupError(f"transport blew up at t={t_fail}", t=t_fail)
        return m_out
    u_traj = Trajectory(grid, u_values)
    m_traj = Trajectory(grid, m_coef_values)

    def provider(t: float) -> np.ndarray:
        return _rates_raw(graph, model, u_traj.sample(t), m_traj.sample(t))

    return solve_transport(graph, provider, m0, grid).values
