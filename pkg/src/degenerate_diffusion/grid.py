"""Uniform space-time meshes and the discrete norms used everywhere."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform mesh x_i = i*dx (i = 0..nx+1) on [0, ell], t_n = n*dt on [0, T].

    ``nx`` counts interior nodes, so there are nx + 2 nodes in total.
    """

    ell: float
    nx: int
    T: float
    nt: int

    def __post_init__(self):
        if not (np.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be positive, got {self.ell}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.nx) != self.nx or self.nx < 8:
            raise ValueError(f"nx must be an integer >= 8, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 8:
            raise ValueError(f"nt must be an integer >= 8, got {self.nt}")
        object.__setattr__(self, "ell", float(self.ell))
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))

    @property
    def dx(self) -> float:
        return self.ell / (self.nx + 1)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def n_nodes(self) -> int:
        return self.nx + 2

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.nx + 2) * self.dx
        x[-1] = self.ell
        x.flags.writeable = False
        return x

    @cached_property
    def x_half(self) -> np.ndarray:
        """Cell midpoints x_{i+1/2}, i = 0..nx."""
        xh = (np.arange(self.nx + 1) + 0.5) * self.dx
        xh.flags.writeable = False
        return xh

    @cached_property
    def times(self) -> np.ndarray:
        t = np.arange(self.nt + 1) * self.dt
        t[-1] = self.T
        t.flags.writeable = False
        return t

    def refined(self, space: int = 2, time: int = 4) -> "Grid":
        """Nested refinement: every node and time level of self is kept."""
        return Grid(self.ell, space * (self.nx + 1) - 1, self.T, time * self.nt)

    def time_index(self, t: float) -> int:
        """Index of the time level nearest to t."""
        return int(np.clip(round(t / self.dt), 0, self.nt))


@dataclass(frozen=True)
class Field:
    """Nodal values of a function on a Grid at one time level."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(f"field needs {self.grid.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite entries")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        return cls(grid, np.broadcast_to(func(grid.x), grid.x.shape))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _values(u, grid=None):
    if isinstance(u, Field):
        return u.grid, u.values
    if grid is None:
        raise TypeError("a raw array needs an explicit grid")
    v = np.asarray(u, dtype=np.float64)
    if v.shape != (grid.n_nodes,):
        raise ValueError("array length does not match the grid")
    return grid, v


def trapezoid(values, dx: float) -> float:
    """Composite trapezoid rule on a uniform mesh."""
    return float(np.trapezoid(values, dx=dx))


def l2_norm_sq(u, grid: Grid | None = None) -> float:
    """Trapezoid approximation of the integral of |u|^2 over (0, ell)."""
    grid, v = _values(u, grid)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries")
    return trapezoid(v * v, grid.dx)


def weighted_h1_seminorm_sq(u, alpha: float, grid: Grid | None = None) -> float:
    """Midpoint value of the integral of x^alpha |u_x|^2, alpha in [0, 2)."""
    if not (0.0 <= alpha < 2.0):
        raise ValueError(f"alpha must lie in [0, 2), got {alpha}")
    grid, v = _values(u, grid)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entries")
    du = np.diff(v) / grid.dx
    return float(np.sum(grid.x_half ** alpha * du * du) * grid.dx)
