"""Hamiltonian models for graph games with congestion.

A HamiltonianModel bundles, per node i, the congestion part H_c(i, p, m),
an additive population coupling f(i, m) with H = H_c + f, the terminal
payoff g(i, m), the p-gradient (the optimal transition rates), and the
first/second partials the uniqueness checker consumes. Built-in families
carry closed forms; custom models fall back to central finite differences.

Built-in families:
  * quadratic_congestion_family: running cost (1/2) c_ij(m) lam^2 per edge
    with c_ij(m) = (eps + m_i)^alpha (eps + m_j)^beta, so
    H(i, p, m) = sum_j max(p_j, 0)^2 / (2 c_ij(m)) + f(i, m).
  * cross_coupling_family: a synthetic certification family whose H_c
    contains a -s * m_target * p term; its block matrix has an indefinite
    symmetric part, which makes it the shipped positive-semidefiniteness
    violation example. Its p-gradient is not a valid rate field (it can go
    negative), so it is meant for the uniqueness tooling, not for solving.

Population couplings come from a small registry (zero, constant, logit,
linear); registry-built couplings on the quadratic family are what the
compiled solver kernels accept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, GmfgError, KinkError
from .graph import Graph

#: |p_j| below this is treated as sitting on the positive-part kink
KINK_TOL = 1e-12

#: relative step for finite-difference fallbacks
FD_REL_STEP = 1e-5

# coupling kind codes shared with the compiled kernels
COUPLING_ZERO = 0
COUPLING_LOGIT = 1
COUPLING_LINEAR = 2
COUPLING_CONSTANT = 3


@dataclass(frozen=True)
class Coupling:
    """Per-node function of the population distribution m.

    margin: evaluable wherever every coordinate of m exceeds -margin.
    kernel_spec: (kind_code, kappa, eps, per-node vector) for registry
    couplings the compiled kernels understand, None for custom ones.
    """

    name: str
    fn: Callable[[int, np.ndarray], float]
    margin: float = math.inf
    kernel_spec: tuple | None = None


def zero_coupling() -> Coupling:
    return Coupling("zero", lambda i, m: 0.0, math.inf, (COUPLING_ZERO, 0.0, 0.0, None))


def constant_coupling(values) -> Coupling:
    v = np.asarray(values, dtype=np.float64).copy()
    return Coupling(
        "constant", lambda i, m: float(v[i]), math.inf, (COUPLING_CONSTANT, 0.0, 0.0, v)
    )


def logit_coupling(kappa: float, eps: float = 1e-2) -> Coupling:
    """Crowd-averse coupling -kappa * log(eps + m_i).

    eps = 0 is legal but shrinks the evaluable neighborhood to m_i > 0,
    excluding the simplex boundary.
    """
    if eps < 0.0:
        raise GmfgError(f"logit coupling needs eps >= 0, got {eps}")
    kappa = float(kappa)
    eps = float(eps)
    return Coupling(
        "logit",
        lambda i, m: -kappa * math.log(eps + m[i]),
        margin=eps,
        kernel_spec=(COUPLING_LOGIT, kappa, eps, None),
    )


def linear_coupling(coeffs) -> Coupling:
    a = np.asarray(coeffs, dtype=np.float64).copy()
    return Coupling(
        "linear", lambda i, m: float(a[i] * m[i]), math.inf, (COUPLING_LINEAR, 0.0, 0.0, a)
    )


class SecondPartials(NamedTuple):
    """Partials of the congestion part H_c at one (i, p, m).

    d_pp: (d_i, d_i), d2 H_c / dp_j dp_k
    d_pm: (d_i, N),  d2 H_c / dp_j dm_l
    d_mp: (N, d_i),  d2 H_c / dm_l dp_k
    d_m:  (N,),      d H_c / dm_l
    """

    d_pp: np.ndarray
    d_pm: np.ndarray
    d_mp: np.ndarray
    d_m: np.ndarray


@dataclass(frozen=True)
class KernelParams:
    """Flat description of a kernel-eligible model for the compiled sweeps."""

    alpha: float
    beta: float
    eps: float
    f_kind: int
    f_kappa: float
    f_eps: float
    f_vec: np.ndarray  # (N,), zeros when unused


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """Immutable bundle of per-node evaluators; all methods are pure."""

    graph: Graph
    name: str
    h_c: Callable[[int, np.ndarray, np.ndarray], float]
    f: Coupling
    g: Coupling
    margin_without_g: float
    eps_boundary: float
    has_kink: bool
    grad_fn: Callable[[int, np.ndarray, np.ndarray], np.ndarray] | None = None
    second_fn: Callable[[int, np.ndarray, np.ndarray], SecondPartials] | None = None
    lagrangian: Callable | None = None
    kernel_params: KernelParams | None = None
    kink_tol: float = KINK_TOL

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    # -- domain handling ---------------------------------------------------

    def check_domain(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        if m.shape != (self.n_nodes,):
            raise DomainError(f"m must have shape ({self.n_nodes},), got {m.shape}")
        if self.eps_boundary != math.inf and not np.all(m > -self.eps_boundary):
            raise DomainError(
                f"m={m} outside the evaluable neighborhood (margin {self.eps_boundary})"
            )
        return m

    def _check_p(self, i: int, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64)
        d = self.graph.out_degree[i]
        if p.shape != (d,):
            raise GmfgError(f"p at node {i} must have shape ({d},), got {p.shape}")
        return p

    # -- evaluators ----------------------------------------------------------

    def hamiltonian(self, i: int, p, m) -> float:
        """H(i, p, m) = H_c(i, p, m) + f(i, m)."""
        m = self.check_domain(m)
        p = self._check_p(i, p)
        return self.h_c(i, p, m) + self.f.fn(i, m)

    def congestion_value(self, i: int, p, m) -> float:
        m = self.check_domain(m)
        p = self._check_p(i, p)
        return self.h_c(i, p, m)

    def f_value(self, i: int, m) -> float:
        return self.f.fn(i, self.check_domain(m))

    def g_value(self, i: int, m) -> float:
        return self.g.fn(i, self.check_domain(m))

    def grad_p(self, i: int, p, m) -> np.ndarray:
        """Optimal transition rates, componentwise >= 0 for Legendre families."""
        m = self.check_domain(m)
        p = self._check_p(i, p)
        if self.grad_fn is not None:
            return self.grad_fn(i, p, m)
        return _fd_grad(self, i, p, m)

    def second_partials(self, i: int, p, m) -> SecondPartials:
        m = self.check_domain(m)
        p = self._check_p(i, p)
        if self.has_kink and p.size and np.min(np.abs(p)) < self.kink_tol:
            raise KinkError(
                f"second partials undefined within {self.kink_tol} of the p=0 kink"
            )
        if self.second_fn is not None:
            return self.second_fn(i, p, m)
        return _fd_second(self, i, p, m)


def with_terminal(model: HamiltonianModel, g: Coupling) -> HamiltonianModel:
    """Same model with a different terminal payoff."""
    return replace(
        model, g=g, eps_boundary=min(model.margin_without_g, g.margin)
    )


# -- finite-difference fallbacks ---------------------------------------------


def _fd_grad(model: HamiltonianModel, i: int, p, m) -> np.ndarray:
    out = np.empty(p.size)
    for j in range(p.size):
        h = FD_REL_STEP * max(1.0, abs(p[j]))
        hi, lo = p.copy(), p.copy()
        hi[j] += h
        lo[j] -= h
        out[j] = (model.h_c(i, hi, m) - model.h_c(i, lo, m)) / (2.0 * h)
    return out


def _fd_second(model: HamiltonianModel, i: int, p, m) -> SecondPartials:
    d, n = p.size, model.n_nodes
    hc = model.h_c

    def hp(j):
        return FD_REL_STEP * max(1.0, abs(p[j]))

    def hm(l):
        return FD_REL_STEP * max(1.0, abs(m[l]))

    d_pp = np.empty((d, d))
    base = hc(i, p, m)
    for j in range(d):
        for k in range(j, d):
            if j == k:
                h = hp(j)
                hi, lo = p.copy(), p.copy()
                hi[j] += h
                lo[j] -= h
                d_pp[j, j] = (hc(i, hi, m) - 2.0 * base + hc(i, lo, m)) / (h * h)
            else:
                hj, hk = hp(j), hp(k)
                val = 0.0
                for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                    q = p.copy()
                    q[j] += sj * hj
                    q[k] += sk * hk
                    val += sj * sk * hc(i, q, m)
                d_pp[j, k] = d_pp[k, j] = val / (4.0 * hj * hk)

    d_m = np.empty(n)
    for l in range(n):
        h = hm(l)
        hi, lo = m.copy(), m.copy()
        hi[l] += h
        lo[l] -= h
        d_m[l] = (hc(i, p, hi) - hc(i, p, lo)) / (2.0 * h)

    d_pm = np.empty((d, n))
    for j in range(d):
        for l in range(n):
            hj, hl = hp(j), hm(l)
            val = 0.0
            for sj, sl in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                q, mu = p.copy(), m.copy()
                q[j] += sj * hj
                mu[l] += sl * hl
                val += sj * sl * hc(i, q, mu)
            d_pm[j, l] = val / (4.0 * hj * hl)
    # one mixed-partial stencil serves both orders in the fallback;
    # closed-form families assemble the two independently
    return SecondPartials(d_pp, d_pm, d_pm.T.copy(), d_m)


# -- built-in families ---------------------------------------------------------


def quadratic_congestion_family(
    graph: Graph,
    alpha: float = 0.0,
    beta: float = 0.0,
    eps: float = 1e-2,
    f: Coupling | None = None,
    g: Coupling | None = None,
) -> HamiltonianModel:
    """Quadratic movement costs with congestion weights.

    Per edge (i, j): cost (1/2) c_ij(m) lam^2, c_ij(m) = (eps+m_i)^alpha *
    (eps+m_j)^beta, hence H(i,p,m) = sum_j max(p_j,0)^2 / (2 c_ij(m)) +
    f(i,m) and rate_j = max(p_j,0)/c_ij(m). All partials in closed form.
    """
    if alpha < 0.0 or beta < 0.0:
        raise GmfgError(f"congestion exponents must be >= 0, got alpha={alpha}, beta={beta}")
    if not (eps > 0.0):
        raise GmfgError(f"congestion regularization eps must be > 0, got {eps}")
    alpha, beta, eps = float(alpha), float(beta), float(eps)
    f = f if f is not None else zero_coupling()
    g = g if g is not None else zero_coupling()
    nbrs_of = [np.asarray(nb, dtype=np.int64) for nb in graph.out_adj]

    def weights(i: int, m: np.ndarray) -> np.ndarray:
        return (eps + m[i]) ** alpha * (eps + m[nbrs_of[i]]) ** beta

    def h_c(i: int, p: np.ndarray, m: np.ndarray) -> float:
        if p.size == 0:
            return 0.0
        pos = np.maximum(p, 0.0)
        return float(np.sum(pos * pos / (2.0 * weights(i, m))))

    def grad(i: int, p: np.ndarray, m: np.ndarray) -> np.ndarray:
        if p.size == 0:
            return np.zeros(0)
        return np.maximum(p, 0.0) / weights(i, m)

    def second(i: int, p: np.ndarray, m: np.ndarray) -> SecondPartials:
        n = graph.n_nodes
        d = p.size
        nbrs = nbrs_of[i]
        pos = np.maximum(p, 0.0)
        w = weights(i, m)
        active = (p > 0.0).astype(np.float64)
        d_pp = np.diag(active / w) if d else np.zeros((0, 0))
        # per-slot H contribution and logarithmic weight derivatives
        h_slot = pos * pos / (2.0 * w)
        rate = pos / w
        src_fac = alpha / (eps + m[i])
        tgt_fac = beta / (eps + m[nbrs]) if d else np.zeros(0)
        d_m = np.zeros(n)
        d_pm = np.zeros((d, n))
        if d:
            d_m[i] -= src_fac * float(np.sum(h_slot))
            np.add.at(d_m, nbrs, -h_slot * tgt_fac)
            d_pm[:, i] -= rate * src_fac
            d_pm[np.arange(d), nbrs] -= rate * tgt_fac
        d_mp = np.zeros((n, d))
        if d:
            d_mp[i, :] -= rate * src_fac
            d_mp[nbrs, np.arange(d)] -= rate * tgt_fac
        return SecondPartials(d_pp, d_pm, d_mp, d_m)

    def lagrangian(i: int, lam: np.ndarray, m: np.ndarray):
        lam = np.asarray(lam, dtype=np.float64)
        w = weights(i, m)
        return np.sum(w * lam * lam / 2.0, axis=-1) - f.fn(i, m)

    cong_margin = eps if (alpha > 0.0 or beta > 0.0) else math.inf
    margin_without_g = min(cong_margin, f.margin)
    kp = None
    if f.kernel_spec is not None:
        kind, kappa, f_eps, vec = f.kernel_spec
        f_vec = vec if vec is not None else np.zeros(graph.n_nodes)
        kp = KernelParams(alpha, beta, eps, kind, kappa, f_eps, f_vec)
    return HamiltonianModel(
        graph=graph,
        name="quadratic_congestion",
        h_c=h_c,
        f=f,
        g=g,
        margin_without_g=margin_without_g,
        eps_boundary=min(margin_without_g, g.margin),
        has_kink=True,
        grad_fn=grad,
        second_fn=second,
        lagrangian=lagrangian,
        kernel_params=kp,
    )


def cross_coupling_family(
    graph: Graph,
    s: float = 1.0,
    f: Coupling | None = None,
    g: Coupling | None = None,
) -> HamiltonianModel:
    """Synthetic family H_c(i,p,m) = sum_k max(p_k,0)^2/2 - s * m_target * p_k.

    The cross term puts s * q couplings in the node block of the uniqueness
    matrix, whose symmetric part has zero trace and is nonzero at generic q,
    so the positivity criterion fails with an explicit witness. The
    p-gradient can be negative; this family exists for the certification
    tooling, not as a playable rate model.
    """
    if s < 0.0:
        raise GmfgError(f"cross-coupling strength must be >= 0, got {s}")
    s = float(s)
    f = f if f is not None else zero_coupling()
    g = g if g is not None else zero_coupling()
    nbrs_of = [np.asarray(nb, dtype=np.int64) for nb in graph.out_adj]

    def h_c(i: int, p: np.ndarray, m: np.ndarray) -> float:
        if p.size == 0:
            return 0.0
        pos = np.maximum(p, 0.0)
        return float(np.sum(pos * pos / 2.0) - s * np.sum(m[nbrs_of[i]] * p))

    def grad(i: int, p: np.ndarray, m: np.ndarray) -> np.ndarray:
        if p.size == 0:
            return np.zeros(0)
        return np.maximum(p, 0.0) - s * m[nbrs_of[i]]

    def second(i: int, p: np.ndarray, m: np.ndarray) -> SecondPartials:
        n = graph.n_nodes
        d = p.size
        nbrs = nbrs_of[i]
        d_pp = np.diag((p > 0.0).astype(np.float64)) if d else np.zeros((0, 0))
        d_m = np.zeros(n)
        d_pm = np.zeros((d, n))
        d_mp = np.zeros((n, d))
        if d:
            np.add.at(d_m, nbrs, -s * p)
            d_pm[np.arange(d), nbrs] = -s
            d_mp[nbrs, np.arange(d)] = -s
        return SecondPartials(d_pp, d_pm, d_mp, d_m)

    margin_without_g = f.margin
    return HamiltonianModel(
        graph=graph,
        name="cross_coupling",
        h_c=h_c,
        f=f,
        g=g,
        margin_without_g=margin_without_g,
        eps_boundary=min(margin_without_g, g.margin),
        has_kink=True,
        grad_fn=grad,
        second_fn=second,
    )


def custom_model(
    graph: Graph,
    h_c: Callable[[int, np.ndarray, np.ndarray], float],
    f: Coupling | None = None,
    g: Coupling | None = None,
    *,
    margin: float = math.inf,
    has_kink: bool = False,
    grad_fn=None,
    second_fn=None,
    lagrangian=None,
    name: str = "custom",
) -> HamiltonianModel:
    """Model from a raw congestion-part callable; missing derivatives fall
    back to central finite differences (relative step 1e-5)."""
    f = f if f is not None else zero_coupling()
    g = g if g is not None else zero_coupling()
    margin_without_g = min(margin, f.margin)
    return HamiltonianModel(
        graph=graph,
        name=name,
        h_c=h_c,
        f=f,
        g=g,
        margin_without_g=margin_without_g,
        eps_boundary=min(margin_without_g, g.margin),
        has_kink=has_kink,
        grad_fn=grad_fn,
        second_fn=second_fn,
        lagrangian=lagrangian,
    )
