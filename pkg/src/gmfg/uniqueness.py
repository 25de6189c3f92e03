"""Uniqueness certification: monotone couplings and block-matrix positivity.

The criterion has three legs:
  * the terminal payoff g and the additive coupling f must be monotone in
    the separating sense (any nonnegative pairing forces equality, checked
    on random simplex pairs via strict negativity),
  * the block matrix built from the congestion part's partials must have a
    positive-semidefinite symmetric part at every (q_1..q_N, m), checked on
    a seeded low-discrepancy sample of a q-box times the simplex.

Block layout (dimension N + sum_i d_i): the first N rows/columns are node
coordinates; then one contiguous block of size d_i per node in node order,
each edge slot ordered as in Graph.out_adj. With q_i the p-argument at
node i:
    A[i, j]          = -dH_c/dm_j (i, q_i, m)
    B^i[j, k]        = m_i * d2H_c/dm_j dq_ik (i, q_i, m)   (top-right)
    C^i[j, k]        = m_i * d2H_c/dm_k dq_ij (i, q_i, m)   (bottom-left)
    D^i[j, k]        = m_i * d2H_c/dq_ij dq_ik (i, q_i, m)  (diagonal)
with zero couplings between distinct nodes' edge blocks. Only the quadratic
form matters, so positivity is judged on the spectrum of (M + M^T)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GmfgError, KinkError
from .fixed_point import MfgProblem, solve_mfg
from .graph import Graph
from .hamiltonians import HamiltonianModel
from .hjb import a_priori_bound
from .sampling import box_simplex_sample, random_simplex_pairs
from .trajectory import Trajectory, sup_distance

#: eigenvalue tolerance below which the symmetric part counts as indefinite
PSD_TOL = 1e-9
#: monotonicity pairings must stay below -MONO_TOL to count as strict
MONO_TOL = 1e-12

VERDICT_CERTIFIED = "certified_on_samples"
VERDICT_VIOLATED = "violated"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass
class BlockMatrixM:
    """Dense assembled block matrix with its evaluation point."""

    matrix: np.ndarray
    graph: Graph
    q: tuple[np.ndarray, ...]
    m: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _q_slice(self, i: int) -> slice:
        n = self.graph.n_nodes
        off = self.graph.edge_offset
        return slice(n + int(off[i]), n + int(off[i + 1]))

    def block_a(self) -> np.ndarray:
        n = self.graph.n_nodes
        return self.matrix[:n, :n]

    def block_b(self, i: int) -> np.ndarray:
        return self.matrix[: self.graph.n_nodes, self._q_slice(i)]

    def block_c(self, i: int) -> np.ndarray:
        return self.matrix[self._q_slice(i), : self.graph.n_nodes]

    def block_d(self, i: int) -> np.ndarray:
        return self.matrix[self._q_slice(i), self._q_slice(i)]


@dataclass
class MonotonicityRecord:
    """Sampled pairings sum_i (h(i,m) - h(i,mu)) (m_i - mu_i) over random
    simplex pairs. The separating condition holds on the sample iff every
    pairing is strictly negative (below -mono_tol)."""

    n_pairs: int
    min_pairing: float
    max_pairing: float
    worst_pair: tuple[np.ndarray, np.ndarray] | None
    mono_tol: float

    @property
    def satisfied(self) -> bool:
        return self.n_pairs > 0 and self.max_pairing < -self.mono_tol


@dataclass
class UniquenessReport:
    verdict: str
    n_samples: int
    min_eig_overall: float | None
    witness_q: tuple[np.ndarray, ...] | None
    witness_m: np.ndarray | None
    skipped_kink_samples: int
    f_monotone: MonotonicityRecord
    g_monotone: MonotonicityRecord
    psd_tol: float
    q_max: float


@dataclass
class TwoSolveReport:
    criterion_satisfied: bool
    converged_a: bool
    converged_b: bool
    m_distance: float | None
    u_distance: float | None
    tol_agree: float

    @property
    def agreement_ok(self) -> bool | None:
        if not (self.converged_a and self.converged_b):
            return None
        return self.m_distance <= self.tol_agree and self.u_distance <= self.tol_agree


def assemble_M(
    model: HamiltonianModel, graph: Graph, q: list[np.ndarray], m
) -> BlockMatrixM:
    """Assemble the block matrix at (q_1..q_N, m).

    Checks (not assumes) that each C^i is the transpose of B^i to 1e-8, as
    Schwarz symmetry demands for twice continuously differentiable
    congestion parts. Raises KinkError through second_partials when any q_i
    coordinate sits on a positive-part kink.
    """
    if model.graph != graph:
        raise GmfgError("model was built for a different graph")
    m = model.check_domain(m)
    n = graph.n_nodes
    dim = n + graph.n_edges
    out = np.zeros((dim, dim))
    q = [np.asarray(qi, dtype=np.float64) for qi in q]
    if len(q) != n:
        raise GmfgError(f"q must contain one vector per node, got {len(q)}")
    off = graph.edge_offset
    for i in range(n):
        parts = model.second_partials(i, q[i], m)
        sl = slice(n + int(off[i]), n + int(off[i + 1]))
        out[i, :n] = -parts.d_m
        b = m[i] * parts.d_mp
        c = m[i] * parts.d_pm
        if not np.allclose(c, b.T, atol=1e-8, rtol=0.0):
            raise GmfgError(
                f"C^{i} is not the transpose of B^{i} to 1e-8; "
                "the congestion part does not look C^2 at this point"
            )
        out[:n, sl] = b
        out[sl, :n] = c
        out[sl, sl] = m[i] * parts.d_pp
    return BlockMatrixM(out, graph, tuple(q), m)


def min_sym_eigenvalue(M) -> float:
    """Smallest eigenvalue of (M + M^T)/2; accepts BlockMatrixM or array."""
    a = M.matrix if isinstance(M, BlockMatrixM) else np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise GmfgError("matrix entries must be finite")
    sym = 0.5 * (a + a.T)
    return float(np.linalg.eigvalsh(sym)[0])


def check_monotone(
    fn: Callable[[int, np.ndarray], float],
    n_nodes: int,
    n_pairs: int,
    seed: int = 0,
    mono_tol: float = MONO_TOL,
) -> MonotonicityRecord:
    """Sample the separating-monotonicity pairing on random simplex pairs.

    fn(i, m) is the per-node coupling. Records the extreme pairings and the
    pair attaining the maximum (the one closest to violating strictness).
    """
    if n_pairs <= 0:
        return MonotonicityRecord(0, np.inf, -np.inf, None, mono_tol)
    ms, mus = random_simplex_pairs(n_nodes, n_pairs, seed)
    min_pair = np.inf
    max_pair = -np.inf
    worst = None
    for m, mu in zip(ms, mus):
        if float(np.max(np.abs(m - mu))) < 1e-15:
            continue
        pairing = sum(
            (fn(i, m) - fn(i, mu)) * (m[i] - mu[i]) for i in range(n_nodes)
        )
        min_pair = min(min_pair, pairing)
        if pairing > max_pair:
            max_pair = pairing
            worst = (m, mu)
    return MonotonicityRecord(n_pairs, float(min_pair), float(max_pair), worst, mono_tol)


def certify_psd(
    model: HamiltonianModel,
    graph: Graph,
    n_samples: int = 2000,
    n_pairs: int = 500,
    seed: int = 0,
    q_max: float | None = None,
    horizon: float | None = None,
    psd_tol: float = PSD_TOL,
    mono_tol: float = MONO_TOL,
) -> UniquenessReport:
    """Sampled certification of the uniqueness criterion.

    q vectors are drawn from [-q_max, q_max]^{d_i}; by default q_max is
    twice the sampled a priori value bound (value differences along any
    solution live inside that box), which needs `horizon`. Kink samples are
    skipped and counted. Verdict: violated when the symmetric part dips
    below -psd_tol somewhere or a monotonicity record fails strictness;
    inconclusive when the matrix was never sampled (n_samples == 0);
    certified_on_samples otherwise.
    """
    if model.graph != graph:
        raise GmfgError("model was built for a different graph")
    if q_max is None:
        if horizon is None:
            raise GmfgError("either q_max or horizon is needed to size the q box")
        q_max = 2.0 * a_priori_bound(model, horizon)
    f_rec = check_monotone(model.f.fn, graph.n_nodes, n_pairs, seed=seed + 1, mono_tol=mono_tol)
    g_rec = check_monotone(model.g.fn, graph.n_nodes, n_pairs, seed=seed + 2, mono_tol=mono_tol)

    n = graph.n_nodes
    off = graph.edge_offset
    min_eig = None
    witness_q = None
    witness_m = None
    skipped = 0
    if n_samples > 0:
        box, simplex = box_simplex_sample(graph.n_edges, n, n_samples, q_max, seed)
        for row in range(n_samples):
            qs = [box[row, off[i] : off[i + 1]] for i in range(n)]
            m = simplex[row]
            try:
                block = assemble_M(model, graph, qs, m)
            except KinkError:
                skipped += 1
                continue
            eig = min_sym_eigenvalue(block)
            if min_eig is None or eig < min_eig:
                min_eig = eig
                witness_q = block.q
                witness_m = block.m
    psd_failed = min_eig is not None and min_eig < -psd_tol
    if psd_failed or not f_rec.satisfied or not g_rec.satisfied:
        verdict = VERDICT_VIOLATED
    elif n_samples == 0 or min_eig is None:
        verdict = VERDICT_INCONCLUSIVE
    else:
        verdict = VERDICT_CERTIFIED
    return UniquenessReport(
        verdict=verdict,
        n_samples=n_samples,
        min_eig_overall=min_eig,
        witness_q=witness_q,
        witness_m=witness_m,
        skipped_kink_samples=skipped,
        f_monotone=f_rec,
        g_monotone=g_rec,
        psd_tol=psd_tol,
        q_max=float(q_max),
    )


def vertex_concentrated_guess(n: int, floor: float = 1e-3) -> np.ndarray:
    """Mass concentrated on node 0, clamped into the open simplex."""
    if n == 1:
        return np.ones(1)
    v = np.full(n, floor)
    v[0] = 1.0 - (n - 1) * floor
    return v


def two_solve_agreement(
    problem: MfgProblem,
    tol_agree: float = 1e-5,
    scheme: str = "damped_picard",
    omega: float = 0.5,
    tol: float = 1e-8,
    max_iter: int = 500,
    n_samples: int = 2000,
    n_pairs: int = 500,
    seed: int = 0,
    psd_tol: float = PSD_TOL,
) -> tuple[TwoSolveReport, UniquenessReport]:
    """Solve from two distinct initial guesses and compare the limits.

    Gate: the certification report (PSD sampling plus both monotonicity
    checks). When the gate fails the solves still run and the report carries
    criterion_satisfied=False, so no agreement is asserted. Either solve
    failing to converge makes the agreement inconclusive (None).
    """
    from .trajectory import constant_trajectory

    cert = certify_psd(
        problem.model,
        problem.graph,
        n_samples=n_samples,
        n_pairs=n_pairs,
        seed=seed,
        horizon=problem.grid.horizon,
        psd_tol=psd_tol,
    )
    guesses = (
        constant_trajectory(problem.grid, problem.m0),
        constant_trajectory(problem.grid, vertex_concentrated_guess(problem.graph.n_nodes)),
    )
    results = []
    for guess in guesses:
        try:
            results.append(
                solve_mfg(
                    problem,
                    scheme=scheme,
                    omega=omega,
                    tol=tol,
                    max_iter=max_iter,
                    initial_m=guess,
                )
            )
        except GmfgError:
            results.append(None)
    conv_a = results[0] is not None and results[0].converged
    conv_b = results[1] is not None and results[1].converged
    m_dist = u_dist = None
    if results[0] is not None and results[1] is not None:
        m_dist = sup_distance(results[0].m, results[1].m)
        u_dist = sup_distance(results[0].u, results[1].u)
    report = TwoSolveReport(
        criterion_satisfied=cert.verdict == VERDICT_CERTIFIED,
        converged_a=conv_a,
        converged_b=conv_b,
        m_distance=m_dist,
        u_distance=u_dist,
        tol_agree=tol_agree,
    )
    return report, cert
