from pathlib import Path

import numpy as np
import pytest

import gmfg

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def two_node():
    return gmfg.build_graph(2, [(1, 2), (2, 1)])


@pytest.fixture
def triangle():
    # 1 -> {2, 3}, 2 -> 3: node 0 has out-degree 2
    return gmfg.build_graph(3, [(1, 2), (1, 3), (2, 3)])


@pytest.fixture
def ring3():
    return gmfg.build_graph(3, [(1, 2), (2, 3), (3, 1)])


@pytest.fixture
def benchmark_model(two_node):
    """The shipped separable benchmark: alpha=beta=0, logit couplings."""
    return gmfg.quadratic_congestion_family(
        two_node,
        f=gmfg.logit_coupling(1.0, 0.01),
        g=gmfg.logit_coupling(0.1, 0.01),
    )


@pytest.fixture
def benchmark_problem(two_node, benchmark_model):
    return gmfg.MfgProblem(
        two_node, benchmark_model, np.array([0.8, 0.2]), gmfg.TimeGrid(1.0, 200)
    )


@pytest.fixture
def congestion_model(two_node):
    """The shipped true-congestion instance."""
    return gmfg.quadratic_congestion_family(
        two_node,
        alpha=1.0,
        beta=0.5,
        eps=0.1,
        f=gmfg.logit_coupling(0.5, 0.01),
        g=gmfg.constant_coupling([0.0, 0.5]),
    )


@pytest.fixture
def congestion_problem(two_node, congestion_model):
    return gmfg.MfgProblem(
        two_node, congestion_model, np.array([0.7, 0.3]), gmfg.TimeGrid(1.0, 200)
    )
