"""Time-gridded functions [0, T] -> R^N with linear interpolation.

The same representation carries value functions u and densities m. A
Trajectory is understood as the piecewise-linear interpolant of its grid
rows; the integrators treat it as exactly that function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GmfgError, GridMismatchError

#: slack for clamping sample times to [0, T]
TIME_SLACK = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = k*T/K, k = 0..K."""

    horizon: float
    steps: int

    def __post_init__(self):
        if not (self.horizon > 0.0) or not np.isfinite(self.horizon):
            raise GmfgError(f"horizon must be positive and finite, got {self.horizon}")
        if self.steps < 1:
            raise GmfgError(f"grid needs at least one step, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)


class Trajectory:
    """(K+1) x N array of values on a TimeGrid, immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: TimeGrid, values: np.ndarray):
        values = np.array(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != grid.steps + 1:
            raise GmfgError(
                f"values must be (K+1) x N with K={grid.steps}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GmfgError("trajectory values must be finite")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def n_coords(self) -> int:
        return self.values.shape[1]

    def sample(self, t: float) -> np.ndarray:
        """Piecewise-linear interpolation at time t; exact at grid nodes.

        t may overshoot [0, T] by at most TIME_SLACK (clamped).
        """
        T, K = self.grid.horizon, self.grid.steps
        if t < -TIME_SLACK or t > T + TIME_SLACK:
            raise GmfgError(f"sample time {t} outside [0, {T}]")
        t = min(max(t, 0.0), T)
        x = t / self.grid.dt
        k = int(np.floor(x))
        # snap to the node when x is within rounding noise of an integer,
        # so samples at grid times reproduce the stored row exactly
        near = round(x)
        if abs(x - near) < 1e-9 and 0 <= near <= K:
            return self.values[int(near)].copy()
        k = min(max(k, 0), K - 1)
        theta = x - k
        return (1.0 - theta) * self.values[k] + theta * self.values[k + 1]

    def __repr__(self) -> str:
        return (
            f"Trajectory(K={self.grid.steps}, T={self.grid.horizon}, N={self.n_coords})"
        )


def constant_trajectory(grid: TimeGrid, vec: np.ndarray) -> Trajectory:
    """Trajectory equal to vec at every grid node."""
    vec = np.asarray(vec, dtype=np.float64)
    return Trajectory(grid, np.tile(vec, (grid.steps + 1, 1)))


def sup_distance(a: Trajectory, b: Trajectory) -> float:
    """max over grid nodes and coordinates of |a - b|. Grids must match."""
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")
    if a.values.shape != b.values.shape:
        raise GridMismatchError(
            f"coordinate count mismatch: {a.values.shape} vs {b.values.shape}"
        )
    return float(np.max(np.abs(a.values - b.values)))


def write_csv(traj: Trajectory, path: str) -> None:
    """Emit `t,node_1,...,node_N` rows at full double precision."""
    times = traj.grid.times()
    n = traj.n_coords
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(f"node_{i + 1}" for i in range(n)) + "\n")
        for k in range(traj.grid.steps + 1):
            row = ",".join(format(v, ".17g") for v in traj.values[k])
            fh.write(f"{format(times[k], '.17g')},{row}\n")


def read_csv(path: str) -> Trajectory:
    """Inverse of write_csv (grid inferred from the t column)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times, values = data[:, 0], data[:, 1:]
    grid = TimeGrid(horizon=float(times[-1]), steps=len(times) - 1)
    return Trajectory(grid, values)
