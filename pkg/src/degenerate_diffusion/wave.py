"""Wave companion u_tt = (x^alpha a u_x)_x and the Gaussian transform linking it to the heat flow.

(K eta)(t) = int_0^inf eta(tau) G(t, tau) dtau,  G = exp(-tau^2 / 4t) / sqrt(pi t),
maps a wave solution started from rest onto the heat solution with the same
initial data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import Grid, l2_norm_sq
from .model import DegeneracyKind, DiffusionModel, cell_conductance
from .parabolic import Trajectory, _initial_values, assemble_operator, solve_parabolic

TAIL_FACTOR = 13.0     # tau_max = 13 sqrt(t): Gaussian tail below 1e-10
PANELS_PER_ROOT = 8    # dtau <= sqrt(t) / 8
CFL = 0.9


class HorizonError(ValueError):
    """The sampled series stops before the kernel truncation point."""


def kernel(t: float, tau):
    tau = np.asarray(tau, dtype=np.float64)
    return np.exp(-tau * tau / (4.0 * t)) / math.sqrt(math.pi * t)


@dataclass(frozen=True)
class KernelQuadrature:
    """Trapezoid rule for int_0^tau_max eta(tau) G(t, tau) dtau."""

    t: float
    tau_max: float | None = None
    n_tau: int | None = None

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        root = math.sqrt(self.t)
        tau_max = TAIL_FACTOR * root if self.tau_max is None else float(self.tau_max)
        if tau_max < 2.0 * root * 6.5 * (1 - 1e-12):
            raise ValueError("tau_max too small for a 1e-10 tail")
        n = math.ceil(tau_max / (root / PANELS_PER_ROOT)) if self.n_tau is None else int(self.n_tau)
        object.__setattr__(self, "tau_max", tau_max)
        object.__setattr__(self, "n_tau", max(n, 2))

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.tau_max, self.n_tau + 1)

    @property
    def weights(self) -> np.ndarray:
        tau = self.nodes
        w = np.full(tau.shape, self.tau_max / self.n_tau)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w * kernel(self.t, tau)

    @staticmethod
    def tail_bound(t: float, tau_max: float) -> float:
        return math.erfc(tau_max / (2.0 * math.sqrt(t)))


def reznitskaya_apply(eta, t: float, dtau: float | None = None):
    """(K eta)(t) for a callable eta or samples eta[k] = eta(k dtau).

    Samples may be 2-D (time x space); the transform then acts column-wise.
    Raises HorizonError if the samples end before 13 sqrt(t).
    """
    if callable(eta):
        q = KernelQuadrature(t)
        return float(np.dot(q.weights, np.asarray(eta(q.nodes), dtype=np.float64)))
    if dtau is None or dtau <= 0:
        raise ValueError("sampled input needs a positive dtau")
    data = np.asarray(eta, dtype=np.float64)
    tau_max = TAIL_FACTOR * math.sqrt(t)
    k = math.ceil(tau_max / dtau - 1e-9)
    if k > data.shape[0] - 1:
        raise HorizonError(f"series covers tau <= {(data.shape[0] - 1) * dtau:.4g}, "
                           f"need {tau_max:.4g} for t={t}")
    tau = np.arange(k + 1) * dtau
    w = np.full(k + 1, dtau)
    w[0] *= 0.5
    w[-1] *= 0.5
    w *= kernel(t, tau)
    return np.tensordot(w, data[: k + 1], axes=(0, 0))


def verify_lemma2(eta, eta_dd, t_grid, rel_step: float = 1e-3) -> float:
    """max_t |d/dt (K eta)(t) - (K eta'')(t)|, derivative by centered differences."""
    worst = 0.0
    for t in np.atleast_1d(t_grid):
        h = rel_step * t
        d = (reznitskaya_apply(eta, t + h) - reznitskaya_apply(eta, t - h)) / (2.0 * h)
        worst = max(worst, abs(d - reznitskaya_apply(eta_dd, t)))
    return worst


def _wave_kind(model, kind):
    kind = DegeneracyKind.for_alpha(model.alpha) if kind is None else DegeneracyKind.parse(kind)
    if kind is DegeneracyKind.STRONG:
        raise ValueError("the wave companion is only set up for alpha < 1")
    kind.check(model.alpha)
    return kind


def solve_wave(model: DiffusionModel, grid: Grid, u0, t_max: float,
               dt_out: float | None = None, kind=None) -> Trajectory:
    """Leapfrog from rest with Dirichlet ends; records every dt_out up to t_max.

    Internal steps obey dt <= 0.9 dx / sqrt(max kappa).  The returned
    Trajectory lives on Grid(ell, nx, n_out * dt_out, n_out).
    """
    kind = _wave_kind(model, kind)
    kappa = cell_conductance(model, grid, kind)
    kmax = float(np.max(kappa))
    if not kmax > 0:
        raise ValueError("no CFL step exists for a nonpositive coefficient")
    dt_out = grid.dt if dt_out is None else float(dt_out)
    n_out = max(8, math.ceil(t_max / dt_out - 1e-9))
    h_cfl = CFL * grid.dx / math.sqrt(kmax)
    m = max(1, math.ceil(dt_out / h_cfl))
    lower, diag, upper, free = assemble_operator(kappa, grid, kind)
    v0 = _initial_values(u0, grid)
    v0[[0, -1]] = 0.0
    rec = _kernels.leapfrog_march(lower, diag, upper, v0[free], dt_out / m, n_out * m, m)
    u = np.zeros((n_out + 1, grid.n_nodes))
    u[:, free] = rec
    out_grid = Grid(grid.ell, grid.nx, n_out * dt_out, n_out)
    return Trajectory(out_grid, u, model, kind)


def wave_energy(traj: Trajectory, kind=None) -> np.ndarray:
    """E_n = ||u_t||^2 + int kappa |u_x|^2 at interior levels (centered u_t)."""
    g = traj.grid
    kappa = cell_conductance(traj.model, g, traj.kind or _wave_kind(traj.model, kind))
    u = traj.u
    ut = (u[2:] - u[:-2]) / (2.0 * g.dt)
    kin = np.trapezoid(ut * ut, dx=g.dx, axis=1)
    du = np.diff(u[1:-1], axis=1) / g.dx
    pot = np.sum(kappa * du * du, axis=1) * g.dx
    return kin + pot


def transformed_wave(model: DiffusionModel, grid: Grid, u0, t_list, kind=None,
                     wave_dt: float | None = None) -> dict:
    """K applied to one wave run, evaluated at each t in t_list."""
    t_list = [float(t) for t in np.atleast_1d(t_list)]
    t_min, t_hi = min(t_list), max(t_list)
    dt_out = math.sqrt(t_min) / (2 * PANELS_PER_ROOT) if wave_dt is None else wave_dt
    wave = solve_wave(model, grid, u0, TAIL_FACTOR * math.sqrt(t_hi) + 2 * dt_out, dt_out, kind)
    return {t: reznitskaya_apply(wave.u, t, dt_out) for t in t_list}


def verify_equivalence(model: DiffusionModel, u0, t_list, grid: Grid | None = None,
                       kind=None, reference_refine: int = 1, steps_per_unit: int = 20000,
                       wave_dt: float | None = None) -> np.ndarray:
    """Relative L2 gap between K(wave) and the heat solution at each t.

    The heat solution is computed on ``grid`` refined ``reference_refine``
    times in space (restricted back to ``grid``), with about
    ``steps_per_unit`` steps per unit time.
    """
    grid = Grid(1.0, 200, 1.0, 8) if grid is None else grid
    kind = _wave_kind(model, kind)
    ksides = transformed_wave(model, grid, u0, t_list, kind, wave_dt)
    errs = []
    for t, kw in ksides.items():
        nt = max(8, math.ceil(steps_per_unit * t))
        ref_grid = Grid(grid.ell, reference_refine * (grid.nx + 1) - 1, t, nt)
        heat = solve_parabolic(model, kind, ref_grid, u0).u[-1]
        heat = np.interp(grid.x, ref_grid.x, heat)
        den = l2_norm_sq(heat, grid)
        errs.append(math.sqrt(l2_norm_sq(kw - heat, grid) / den))
    return np.array(errs)
