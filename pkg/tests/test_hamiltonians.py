import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import gmfg
from gmfg import DomainError, GmfgError, KinkError
from gmfg.oracles import brute_force_legendre


def central_diff(fn, x, j, h):
    hi, lo = x.copy(), x.copy()
    hi[j] += h
    lo[j] -= h
    return (fn(hi) - fn(lo)) / (2.0 * h)


class TestQuadraticFamily:
    def test_congestion_free_values(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node)
        # alpha=beta=0: H = max(p,0)^2/2
        assert model.hamiltonian(0, [3.0], [0.5, 0.5]) == pytest.approx(4.5)
        assert model.grad_p(0, [3.0], [0.5, 0.5])[0] == 3.0

    def test_nonpositive_p_gives_zero_rates(self, triangle):
        f = gmfg.constant_coupling([0.7, 0.7, 0.7])
        model = gmfg.quadratic_congestion_family(triangle, f=f)
        m = np.array([0.2, 0.3, 0.5])
        assert model.hamiltonian(0, [-1.0, -2.0], m) == pytest.approx(0.7)
        assert np.array_equal(model.grad_p(0, [-1.0, -2.0], m), [0.0, 0.0])

    def test_congestion_weight_closed_form(self, two_node):
        # c = (0.1 + 0.4)^1 = 0.5 at the source: rate 2.0, H-term 1.0
        model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.0, eps=0.1)
        m = np.array([0.4, 0.6])
        assert model.grad_p(0, [1.0], m)[0] == pytest.approx(2.0)
        assert model.hamiltonian(0, [1.0], m) == pytest.approx(1.0)

    def test_congestion_value_vs_brute_force(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.0, eps=0.1)
        m = np.array([0.4, 0.6])
        ref = brute_force_legendre(
            lambda lam, mm: model.lagrangian(0, lam, mm), np.array([1.0]), m, 6.0, 2000
        )
        assert abs(model.hamiltonian(0, [1.0], m) - ref) <= 1e-4

    def test_zero_p_reduces_to_coupling(self, two_node):
        model = gmfg.quadratic_congestion_family(
            two_node, f=gmfg.logit_coupling(1.0, 0.01)
        )
        m = np.array([0.3, 0.7])
        assert model.hamiltonian(0, [0.0], m) == pytest.approx(model.f_value(0, m))

    def test_monotone_in_p(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node, alpha=0.5, beta=0.5, eps=0.2)
        m = np.array([0.5, 0.5])
        assert model.hamiltonian(0, [0.7], m) > model.hamiltonian(0, [0.5], m)

    def test_decomposition_exactness(self, triangle):
        model = gmfg.quadratic_congestion_family(
            triangle, alpha=1.0, beta=0.5, eps=0.1, f=gmfg.logit_coupling(0.7, 0.05)
        )
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.dirichlet(np.ones(3))
            p = rng.uniform(-2, 2, size=2)
            total = model.hamiltonian(0, p, m)
            assert total == pytest.approx(
                model.congestion_value(0, p, m) + model.f_value(0, m), abs=1e-14
            )

    def test_gradient_matches_central_differences(self, triangle):
        model = gmfg.quadratic_congestion_family(triangle, alpha=1.2, beta=0.7, eps=0.15)
        rng = np.random.default_rng(11)
        for _ in range(50):
            m = rng.dirichlet(np.ones(3))
            p = rng.uniform(-2, 2, size=2)
            while np.min(np.abs(p)) < 1e-2:
                p = rng.uniform(-2, 2, size=2)
            grad = model.grad_p(0, p, m)
            for j in range(2):
                fd = central_diff(lambda q: model.hamiltonian(0, q, m), p, j, 1e-5)
                assert abs(fd - grad[j]) <= 1e-6

    def test_gradient_nonnegative_on_samples(self, triangle):
        model = gmfg.quadratic_congestion_family(triangle, alpha=2.0, beta=1.0, eps=0.1)
        rng = np.random.default_rng(13)
        for _ in range(100):
            m = rng.dirichlet(np.ones(3))
            p = rng.uniform(-3, 3, size=2)
            assert np.min(model.grad_p(0, p, m)) >= 0.0

    def test_legendre_consistency_invariant(self, two_node):
        # d=1 sweep at tight tolerance: grid fine enough that the value error
        # c*h^2/8 sits below 1e-6
        model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.0, eps=0.1)
        rng = np.random.default_rng(7)
        for _ in range(100):
            m = rng.dirichlet(np.ones(2))
            p = rng.uniform(-2, 2, size=1)
            lam_max = max(5.0, 2.0 * float(model.grad_p(0, p, m)[0]) + 1.0)
            ref = brute_force_legendre(
                lambda lam, mm: model.lagrangian(0, lam, mm), p, m, lam_max, 10000
            )
            assert abs(model.hamiltonian(0, p, m) - ref) <= 1e-6

    def test_constructor_rejections(self, two_node):
        with pytest.raises(GmfgError, match="eps"):
            gmfg.quadratic_congestion_family(two_node, eps=0.0)
        with pytest.raises(GmfgError, match="exponents"):
            gmfg.quadratic_congestion_family(two_node, alpha=-0.5)


class TestSecondPartials:
    def test_congestion_free_structure(self, triangle):
        model = gmfg.quadratic_congestion_family(triangle)
        m = np.array([0.2, 0.3, 0.5])
        parts = model.second_partials(0, [1.0, -1.0], m)
        assert np.array_equal(parts.d_pp, np.diag([1.0, 0.0]))
        assert np.array_equal(parts.d_pm, np.zeros((2, 3)))
        assert np.array_equal(parts.d_m, np.zeros(3))

    def test_closed_form_matches_hand_fd(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.5, eps=0.1)
        m = np.array([0.4, 0.6])
        p = np.array([0.8])
        parts = model.second_partials(0, p, m)
        h = 1e-6
        for l in range(2):
            fd = central_diff(lambda mm: model.congestion_value(0, p, mm), m, l, h)
            assert abs(parts.d_m[l] - fd) <= 1e-6
            fd_mixed = central_diff(lambda mm: model.grad_p(0, p, mm)[0], m, l, h)
            assert abs(parts.d_pm[0, l] - fd_mixed) <= 1e-6
        fd_pp = central_diff(lambda q: model.grad_p(0, q, m)[0], p, 0, h)
        assert abs(parts.d_pp[0, 0] - fd_pp) <= 1e-6

    def test_schwarz_symmetry(self, triangle):
        model = gmfg.quadratic_congestion_family(triangle, alpha=1.3, beta=0.6, eps=0.12)
        rng = np.random.default_rng(23)
        for _ in range(25):
            m = rng.dirichlet(np.ones(3))
            p = rng.uniform(0.05, 2.0, size=2)
            parts = model.second_partials(0, p, m)
            assert np.max(np.abs(parts.d_pm.T - parts.d_mp)) <= 1e-9

    def test_convexity_in_p(self, triangle):
        model = gmfg.quadratic_congestion_family(triangle, alpha=1.0, beta=1.0, eps=0.1)
        rng = np.random.default_rng(29)
        for _ in range(50):
            m = rng.dirichlet(np.ones(3))
            p = rng.uniform(-2, 2, size=2)
            while np.min(np.abs(p)) < 1e-6:
                p = rng.uniform(-2, 2, size=2)
            eigs = np.linalg.eigvalsh(model.second_partials(0, p, m).d_pp)
            assert eigs.min() >= -1e-10

    def test_kink_rejection(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node)
        with pytest.raises(KinkError):
            model.second_partials(0, [0.0], [0.5, 0.5])
        with pytest.raises(KinkError):
            model.second_partials(0, [1e-13], [0.5, 0.5])

    def test_fd_fallback_matches_closed_form(self, two_node):
        closed = gmfg.quadratic_congestion_family(two_node, alpha=1.0, beta=0.5, eps=0.1)
        fallback = gmfg.custom_model(
            two_node, closed.h_c, margin=0.1, has_kink=True, name="fd_probe"
        )
        m = np.array([0.45, 0.55])
        p = np.array([0.9])
        grad_fd = fallback.grad_p(0, p, m)
        assert abs(grad_fd[0] - closed.grad_p(0, p, m)[0]) <= 1e-6
        a = closed.second_partials(0, p, m)
        b = fallback.second_partials(0, p, m)
        assert np.max(np.abs(a.d_pp - b.d_pp)) <= 1e-5
        assert np.max(np.abs(a.d_pm - b.d_pm)) <= 1e-5
        assert np.max(np.abs(a.d_m - b.d_m)) <= 1e-5


class TestCouplingsAndDomain:
    def test_logit_identity(self, two_node):
        model = gmfg.quadratic_congestion_family(
            two_node, f=gmfg.logit_coupling(1.0, 0.0)
        )
        m = np.array([math.exp(-1.0), 1.0 - math.exp(-1.0)])
        assert model.f_value(0, m) == pytest.approx(1.0, abs=1e-15)

    def test_zero_terminal(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node)
        for m in (np.array([0.5, 0.5]), np.array([0.9, 0.1])):
            assert model.g_value(0, m) == 0.0

    def test_linear_and_constant_couplings(self, two_node):
        lin = gmfg.linear_coupling([2.0, -3.0])
        const = gmfg.constant_coupling([0.25, 0.5])
        m = np.array([0.4, 0.6])
        assert lin.fn(0, m) == pytest.approx(0.8)
        assert lin.fn(1, m) == pytest.approx(-1.8)
        assert const.fn(1, m) == 0.5

    def test_logit_negative_eps_rejected(self):
        with pytest.raises(GmfgError):
            gmfg.logit_coupling(1.0, -0.1)

    def test_domain_violation(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node, alpha=1.0, eps=0.05)
        with pytest.raises(DomainError):
            model.hamiltonian(0, [1.0], [-0.06, 1.06])

    def test_logit_margin_propagates(self, two_node):
        model = gmfg.quadratic_congestion_family(
            two_node, f=gmfg.logit_coupling(1.0, 0.0)
        )
        assert model.eps_boundary == 0.0
        with pytest.raises(DomainError):
            model.f_value(0, np.array([0.0, 1.0]))  # log(0) excluded

    def test_monotone_pairings_of_logit(self):
        # crowd-averse coupling: pairing strictly negative off the diagonal
        coupling = gmfg.logit_coupling(1.0, 0.01)
        rng = np.random.default_rng(31)
        for _ in range(50):
            m = rng.dirichlet(np.ones(3))
            mu = rng.dirichlet(np.ones(3))
            pairing = sum(
                (coupling.fn(i, m) - coupling.fn(i, mu)) * (m[i] - mu[i]) for i in range(3)
            )
            assert pairing < 0.0

    def test_with_terminal_swaps_g(self, two_node):
        model = gmfg.quadratic_congestion_family(two_node)
        shifted = gmfg.with_terminal(model, gmfg.constant_coupling([1.0, 2.0]))
        m = np.array([0.5, 0.5])
        assert shifted.g_value(1, m) == 2.0
        assert model.g_value(1, m) == 0.0
        assert shifted.kernel_params is not None  # terminal swap keeps eligibility

    def test_empty_neighborhood_hamiltonian_is_coupling(self):
        g = gmfg.build_graph(1, [])
        model = gmfg.quadratic_congestion_family(g, f=gmfg.constant_coupling([0.4]))
        assert model.hamiltonian(0, np.zeros(0), [1.0]) == pytest.approx(0.4)
        assert model.grad_p(0, np.zeros(0), [1.0]).size == 0

    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_hamiltonian_monotone_in_p_property(self, p_low, p_gap):
        g = gmfg.build_graph(2, [(1, 2), (2, 1)])
        model = gmfg.quadratic_congestion_family(g, alpha=0.7, beta=0.4, eps=0.1)
        m = np.array([0.5, 0.5])
        low = model.hamiltonian(0, [p_low], m)
        high = model.hamiltonian(0, [p_low + p_gap], m)
        assert high >= low - 1e-12


class TestCrossCouplingFamily:
    def test_values_and_gradient(self, two_node):
        model = gmfg.cross_coupling_family(two_node, s=2.0)
        m = np.array([0.3, 0.7])
        # node 0, p=1: max(1,0)^2/2 - 2 * m_1 * 1 = 0.5 - 1.4
        assert model.hamiltonian(0, [1.0], m) == pytest.approx(0.5 - 1.4)
        assert model.grad_p(0, [1.0], m)[0] == pytest.approx(1.0 - 1.4)

    def test_second_partials_vs_fd(self, two_node):
        model = gmfg.cross_coupling_family(two_node, s=1.5)
        m = np.array([0.4, 0.6])
        p = np.array([0.8])
        parts = model.second_partials(0, p, m)
        assert parts.d_pm[0, 1] == pytest.approx(-1.5)
        fd = central_diff(lambda mm: model.congestion_value(0, p, mm), m, 1, 1e-6)
        assert abs(parts.d_m[1] - fd) <= 1e-6

    def test_negative_strength_rejected(self, two_node):
        with pytest.raises(GmfgError):
            gmfg.cross_coupling_family(two_node, s=-1.0)

    def test_not_kernel_eligible(self, two_node):
        assert gmfg.cross_coupling_family(two_node).kernel_params is None
