"""Mean field games on directed graphs: coupled backward value / forward
transport ODE solver with congestion, plus uniqueness certification."""

from .errors import (
    BlowupError,
    ConfigError,
    DomainError,
    GmfgError,
    GraphError,
    GridMismatchError,
    KinkError,
    PositivityError,
)
from .graph import Graph, build_graph, edge_index, global_edge_index
from .trajectory import (
    TimeGrid,
    Trajectory,
    constant_trajectory,
    read_csv,
    sup_distance,
    write_csv,
)
from .hamiltonians import (
    Coupling,
    HamiltonianModel,
    SecondPartials,
    constant_coupling,
    cross_coupling_family,
    custom_model,
    linear_coupling,
    logit_coupling,
    quadratic_congestion_family,
    with_terminal,
    zero_coupling,
)
from .hjb import HjbSolution, a_priori_bound, hjb_rhs, solve_hjb
from .transport import RateField, flow_rhs, rates_from_u, solve_transport
from .fixed_point import (
    MfgProblem,
    SolveResult,
    VerificationReport,
    solve_mfg,
    theta_map,
    verify_solution,
)
from .uniqueness import (
    BlockMatrixM,
    MonotonicityRecord,
    TwoSolveReport,
    UniquenessReport,
    assemble_M,
    certify_psd,
    check_monotone,
    min_sym_eigenvalue,
    two_solve_agreement,
)
from . import backend, oracles

__version__ = "0.1.0"

__all__ = [
    "BlowupError",
    "ConfigError",
    "DomainError",
    "GmfgError",
    "GraphError",
    "GridMismatchError",
    "KinkError",
    "PositivityError",
    "Graph",
    "build_graph",
    "edge_index",
    "global_edge_index",
    "TimeGrid",
    "Trajectory",
    "constant_trajectory",
    "read_csv",
    "sup_distance",
    "write_csv",
    "Coupling",
    "HamiltonianModel",
    "SecondPartials",
    "constant_coupling",
    "cross_coupling_family",
    "custom_model",
    "linear_coupling",
    "logit_coupling",
    "quadratic_congestion_family",
    "with_terminal",
    "zero_coupling",
    "HjbSolution",
    "a_priori_bound",
    "hjb_rhs",
    "solve_hjb",
    "RateField",
    "flow_rhs",
    "rates_from_u",
    "solve_transport",
    "MfgProblem",
    "SolveResult",
    "VerificationReport",
    "solve_mfg",
    "theta_map",
    "verify_solution",
    "BlockMatrixM",
    "MonotonicityRecord",
    "TwoSolveReport",
    "UniquenessReport",
    "assemble_M",
    "certify_psd",
    "check_monotone",
    "min_sym_eigenvalue",
    "two_solve_agreement",
    "backend",
    "oracles",
    "__version__",
]
