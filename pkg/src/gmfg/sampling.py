"""Low-discrepancy sampling of the probability simplex and of q-boxes.

Two flavors are used:
  * a fixed, unscrambled Halton sample (deterministic, seedless) backing the
    a priori bound estimator, and
  * seeded scrambled Halton samples for the uniqueness certification sweep,
    reproducible from the single run seed.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import qmc


def _halton(dim: int, n_points: int, seed: int | None) -> np.ndarray:
    """Halton points in [0,1]^dim; unscrambled when seed is None."""
    if dim == 0:
        return np.zeros((n_points, 0))
    if seed is None:
        sampler = qmc.Halton(d=dim, scramble=False)
    else:
        sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(n_points)


def uniform_to_simplex(x: np.ndarray) -> np.ndarray:
    """Map points of [0,1]^(N-1) to the simplex P_N via sorted differences."""
    n_points, d = x.shape
    n = d + 1
    padded = np.zeros((n_points, n + 1))
    padded[:, 1:n] = np.sort(x, axis=1)
    padded[:, n] = 1.0
    return np.diff(padded, axis=1)


def simplex_sample(n: int, n_points: int, seed: int | None = None) -> np.ndarray:
    """(n_points, n) low-discrepancy sample of the simplex P_n."""
    if n == 1:
        return np.ones((n_points, 1))
    return uniform_to_simplex(_halton(n - 1, n_points, seed))


def simplex_vertices(n: int) -> np.ndarray:
    """The n vertices of P_n."""
    return np.eye(n)


def bound_estimation_sample(n: int, n_points: int = 1000) -> np.ndarray:
    """The fixed simplex sample backing sup estimates over P_N: an
    unscrambled 1000-point Halton sample plus the vertices."""
    return np.vstack([simplex_sample(n, n_points, seed=None), simplex_vertices(n)])


def box_simplex_sample(
    n_box: int, n_simplex: int, n_points: int, half_width: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Joint low-discrepancy sample of [-half_width, half_width]^n_box x P_N.

    Returns (box_points (n_points, n_box), simplex_points (n_points, N)).
    A single Halton stream covers both factors so the pairing itself is
    low-discrepancy.
    """
    d_simplex = max(n_simplex - 1, 0)
    x = _halton(n_box + d_simplex, n_points, seed)
    box = (2.0 * x[:, :n_box] - 1.0) * half_width
    if n_simplex == 1:
        simplex = np.ones((n_points, 1))
    else:
        simplex = uniform_to_simplex(x[:, n_box:])
    return box, simplex


def random_simplex_pairs(
    n: int, n_pairs: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform pairs (m, mu) on P_n for monotonicity sampling."""
    rng = np.random.default_rng(seed)
    m = rng.dirichlet(np.ones(n), size=n_pairs)
    mu = rng.dirichlet(np.ones(n), size=n_pairs)
    return m, mu
