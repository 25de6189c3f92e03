"""Exception hierarchy shared across the package."""


class GmfgError(Exception):
    """Base class for all package errors."""


class GraphError(GmfgError, ValueError):
    """Invalid graph construction or absent-edge lookup."""


class GridMismatchError(GmfgError, ValueError):
    """Two trajectories were combined but live on different time grids."""


class DomainError(GmfgError, ValueError):
    """A density argument lies outside the model's evaluable neighborhood."""


class KinkError(GmfgError, ValueError):
    """Second partials requested at a non-differentiable point (|p_j| below
    the kink tolerance for a positive-part family)."""


class BlowupError(GmfgError, RuntimeError):
    """An integration produced a nonfinite state. Carries the failure time."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class PositivityError(GmfgError, RuntimeError):
    """The transport integrator could not keep the density nonnegative even
    after local step halving. Carries the failure time and worst value."""

    def __init__(self, message: str, t: float, worst: float):
        super().__init__(message)
        self.t = t
        self.worst = worst


class ConfigError(GmfgError, ValueError):
    """Invalid run configuration. Carries the offending field path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"config field '{field}': {message}")
        self.field = field
