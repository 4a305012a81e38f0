"""Measurement operators, synthetic targets and noise."""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid
from .model import DegeneracyKind, DiffusionModel
from .parabolic import Trajectory, solve_parabolic


class WeightKind(enum.Enum):
    """Weight w(x) multiplying u_x in the interior flux channel beta."""

    X = "x"
    X2 = "x2"
    XALPHA = "xalpha"

    def __call__(self, x, alpha: float | None = None):
        x = np.asarray(x, dtype=np.float64)
        if self is WeightKind.X:
            return x
        if self is WeightKind.X2:
            return x * x
        if alpha is None:
            raise ValueError("weight x^alpha needs alpha")
        return x ** alpha

    @classmethod
    def parse(cls, name) -> "WeightKind":
        if isinstance(name, cls):
            return name
        return cls(str(name).lower().replace("^", "").replace("**", ""))


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass(frozen=True)
class InteriorObservation:
    """gamma ~ u_t(., t0) and beta ~ w(x) u_x(., t0) on the grid nodes."""

    grid: Grid
    t0: float
    gamma: np.ndarray
    beta: np.ndarray
    weight: WeightKind = WeightKind.X
    alpha: float | None = None

    def __post_init__(self):
        for name in ("gamma", "beta"):
            v = np.array(getattr(self, name), dtype=np.float64)
            if v.shape != (self.grid.n_nodes,):
                raise ValueError(f"{name} does not match the grid")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} has non-finite entries")
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        object.__setattr__(self, "weight", WeightKind.parse(self.weight))

    channels = ("gamma", "beta")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "gamma", "beta"])
            for row in zip(self.grid.x, self.gamma, self.beta):
                w.writerow([_fmt(v) for v in row])

    @classmethod
    def from_csv(cls, path, grid: Grid, t0: float, weight="x", alpha=None):
        data = _read_columns(path, ["x", "gamma", "beta"])
        if not np.allclose(data["x"], grid.x, rtol=0, atol=1e-12 * grid.ell):
            raise ValueError("CSV nodes do not match the grid")
        return cls(grid, t0, data["gamma"], data["beta"], weight, alpha)


@dataclass(frozen=True)
class BoundaryFluxObservation:
    """eta_n ~ u_x(ell, t_n), n = 0..nt."""

    grid: Grid
    eta: np.ndarray

    def __post_init__(self):
        v = np.array(self.eta, dtype=np.float64)
        if v.shape != (self.grid.nt + 1,):
            raise ValueError("eta must have nt+1 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("eta has non-finite entries")
        v.flags.writeable = False
        object.__setattr__(self, "eta", v)

    channels = ("eta",)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "eta"])
            for row in zip(self.grid.times, self.eta):
                w.writerow([_fmt(v) for v in row])

    @classmethod
    def from_csv(cls, path, grid: Grid):
        data = _read_columns(path, ["t", "eta"])
        if not np.allclose(data["t"], grid.times, rtol=0, atol=1e-12 * grid.T):
            raise ValueError("CSV times do not match the grid")
        return cls(grid, data["eta"])


def _read_columns(path, names):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != names:
        raise ValueError(f"expected CSV header {names}")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64)
    return {n: body[:, j] for j, n in enumerate(names)}


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int = 0
    law: str = "uniform"

    def __post_init__(self):
        if not (self.level >= 0):
            raise ValueError("noise level must be >= 0")
        if self.law != "uniform":
            raise ValueError("only the uniform noise law is implemented")


# measurements ---------------------------------------------------------------

def _time_derivative(u: np.ndarray, n: int, dt: float) -> np.ndarray:
    # backward differences, fourth order once four past levels exist
    if n >= 4:
        return (25 * u[n] - 48 * u[n - 1] + 36 * u[n - 2] - 16 * u[n - 3] + 3 * u[n - 4]) / (12 * dt)
    if n >= 2:
        return (3 * u[n] - 4 * u[n - 1] + u[n - 2]) / (2 * dt)
    return (u[n] - u[n - 1]) / dt


def measure_interior(traj: Trajectory, t0: float, weight="x", alpha: float | None = None):
    """(gamma, beta) at the time level nearest t0."""
    g = traj.grid
    if not (0.0 < t0 <= g.T * (1 + 1e-12)):
        raise ValueError(f"t0={t0} outside (0, T]")
    n = max(1, g.time_index(t0))
    weight = WeightKind.parse(weight)
    if weight is WeightKind.XALPHA and alpha is None and traj.model is not None:
        alpha = traj.model.alpha
    gamma = _time_derivative(traj.u, n, g.dt)
    beta = weight(g.x, alpha) * np.gradient(traj.u[n], g.dx, edge_order=2)
    return gamma, beta


def measure_boundary_flux(traj: Trajectory) -> np.ndarray:
    """Second-order one-sided u_x(ell, t_n) for every time level."""
    u = traj.u
    return (3 * u[:, -1] - 4 * u[:, -2] + u[:, -3]) / (2 * traj.grid.dx)


def observe(traj: Trajectory, obs_kind: str, t0=None, weight="x", alpha=None):
    if obs_kind == "interior":
        gamma, beta = measure_interior(traj, t0, weight, alpha)
        return InteriorObservation(traj.grid, traj.grid.time_index(t0) * traj.grid.dt,
                                   gamma, beta, weight, alpha)
    if obs_kind == "boundary":
        return BoundaryFluxObservation(traj.grid, measure_boundary_flux(traj))
    raise ValueError(f"unknown observation kind {obs_kind!r}")


def synthesize(model_true: DiffusionModel, kind, grid: Grid, u0, f=None,
               obs_kind: str = "interior", t0: float | None = None, weight="x",
               alpha: float | None = None, data_grid: Grid | None = None,
               crime: bool = False, scheme: str | None = None):
    """Synthetic target on ``grid`` generated from a finer forward solve.

    The data grid defaults to ``grid.refined(2, 4)``; its nodes and levels
    contain those of ``grid``, so restriction is linear interpolation at
    shared points.  ``crime=True`` solves on ``grid`` itself (tests only).
    """
    kind = DegeneracyKind.parse(kind)
    if crime:
        data_grid = grid
    elif data_grid is None:
        data_grid = grid.refined(2, 4)
    elif not (data_grid.nx > grid.nx and data_grid.nt >= grid.nt):
        raise ValueError("data grid must be finer than the inversion grid")
    if data_grid.ell != grid.ell or data_grid.T != grid.T:
        raise ValueError("data grid must cover the same domain")
    kw = {} if scheme is None else {"scheme": scheme}
    traj = solve_parabolic(model_true, kind, data_grid, u0, f, **kw)
    if obs_kind == "interior":
        if t0 is None:
            raise ValueError("interior observation needs t0")
        gamma, beta = measure_interior(traj, t0, weight, alpha)
        t_snap = grid.time_index(t0) * grid.dt
        return InteriorObservation(grid, t_snap, np.interp(grid.x, data_grid.x, gamma),
                                   np.interp(grid.x, data_grid.x, beta), weight, alpha)
    if obs_kind == "boundary":
        eta = measure_boundary_flux(traj)
        return BoundaryFluxObservation(grid, np.interp(grid.times, traj.times, eta))
    raise ValueError(f"unknown observation kind {obs_kind!r}")


def add_noise(obs, spec: NoiseSpec):
    """Add p * ||d||_inf * U(-1, 1) to every channel d, seeded by spec.seed."""
    if spec.level == 0:
        return obs
    rng = np.random.default_rng(spec.seed)
    noisy = {}
    for name in obs.channels:
        d = getattr(obs, name)
        scale = spec.level * float(np.max(np.abs(d))) if d.size else 0.0
        noisy[name] = d + scale * rng.uniform(-1.0, 1.0, size=d.shape)
    return replace(obs, **noisy)
