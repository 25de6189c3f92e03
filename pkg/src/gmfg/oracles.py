"""Independent brute-force and closed-form references used by the tests.

Everything here is deliberately slow and simple (exhaustive grids, textbook
closed forms) and shares no code with the evaluators it validates.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import GmfgError
from .graph import Graph


class LambdaBoundaryError(GmfgError):
    """Grid argmax landed on the upper boundary: lambda_max too small."""


def _candidate_grid(d: int, lambda_max: float, grid_n: int) -> np.ndarray:
    axes = [np.linspace(0.0, lambda_max, grid_n + 1)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([ax.ravel() for ax in mesh], axis=1)


def brute_force_legendre(
    L_eval: Callable,
    p: np.ndarray,
    m: np.ndarray,
    lambda_max: float = 5.0,
    grid_n: int = 1000,
) -> float:
    """sup over nonnegative rate vectors of lam.p - L(lam, m) by grid search.

    The grid covers [0, lambda_max]^d with step lambda_max/grid_n. L_eval is
    called on the whole (P, d) candidate array when it vectorizes, one point
    at a time otherwise. Raises LambdaBoundaryError when the argmax touches
    the upper boundary (super-linearity should push it inside).
    """
    p = np.asarray(p, dtype=np.float64)
    d = p.size
    if d == 0:
        return float(-L_eval(np.zeros(0), m))
    grid = _candidate_grid(d, lambda_max, grid_n)
    try:
        L = np.asarray(L_eval(grid, m), dtype=np.float64)
        if L.shape != (grid.shape[0],):
            raise ValueError
    except Exception:
        L = np.array([L_eval(lam, m) for lam in grid], dtype=np.float64)
    objective = grid @ p - L
    best = int(np.argmax(objective))
    if np.any(grid[best] >= lambda_max):
        raise LambdaBoundaryError(
            f"argmax on the lambda_max={lambda_max} boundary; enlarge the box"
        )
    return float(objective[best])


def closed_form_two_node(a: float, b: float, m1_0: float, t: float) -> float:
    """m1(t) for the two-node constant-rate flow: dm1/dt = b*m2 - a*m1.

    Solution b/(a+b) + (m1_0 - b/(a+b)) * exp(-(a+b) t); a + b = 0 freezes
    the flow at m1_0.
    """
    if a < 0.0 or b < 0.0:
        raise GmfgError(f"rates must be nonnegative, got a={a}, b={b}")
    total = a + b
    if total == 0.0:
        return m1_0
    limit = b / total
    return limit + (m1_0 - limit) * math.exp(-total * t)


def best_response_check(
    model,
    graph: Graph,
    u_vec: np.ndarray,
    m_vec: np.ndarray,
    lambda_max: float = 5.0,
    grid_n: int = 1000,
    rates: list[np.ndarray] | None = None,
) -> float:
    """Max over nodes of (grid-best objective - objective at the used rates).

    The used rates default to the model's p-gradient; passing `rates`
    overrides them (to measure the suboptimality of a perturbed field).
    Requires a model with a closed-form running cost. The result is at most
    the grid resolution error for true best responses and can be slightly
    negative when the grid is the weaker optimizer.
    """
    if model.lagrangian is None:
        raise GmfgError("best_response_check needs a model with closed-form running cost")
    u_vec = np.asarray(u_vec, dtype=np.float64)
    m_vec = np.asarray(m_vec, dtype=np.float64)
    worst = 0.0
    for i in range(graph.n_nodes):
        nbrs = np.asarray(graph.out_adj[i], dtype=np.int64)
        d = nbrs.size
        if d == 0:
            continue
        p = u_vec[nbrs] - u_vec[i]
        lam_used = np.asarray(rates[i] if rates is not None else model.grad_p(i, p, m_vec))
        used_obj = float(lam_used @ p - model.lagrangian(i, lam_used, m_vec))
        grid = _candidate_grid(d, lambda_max, grid_n)
        objective = grid @ p - np.asarray(model.lagrangian(i, grid, m_vec))
        best = int(np.argmax(objective))
        if np.any(grid[best] >= lambda_max):
            raise LambdaBoundaryError(
                f"argmax on the lambda_max={lambda_max} boundary at node {i}"
            )
        worst = max(worst, float(objective[best]) - used_obj)
    return worst
