"""Least-squares identification of the coefficient from observations."""
from __future__ import annotations

import json
import math
import threading
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid
from .model import DegeneracyKind, DiffusionModel
from .observations import (BoundaryFluxObservation, InteriorObservation, NoiseSpec,
                           WeightKind, add_noise, measure_boundary_flux, measure_interior)
from .parabolic import DEFAULT_SCHEME, solve_parabolic

COST_TOL = 1e-22
PGRAD_TOL = 1e-12
MAX_ITER = 100
ARMIJO_C1 = 1e-4
MAX_HALVINGS = 40
LB_THRESHOLD = 1e-8


@dataclass(frozen=True)
class InverseProblemSpec:
    """Which coefficient parameters are free, their box, and the data to fit.

    ``base_model`` fixes the profile family and the values of every
    parameter not listed in ``free``.
    """

    base_model: DiffusionModel
    free: tuple
    bounds: tuple
    initial: tuple
    kind: DegeneracyKind
    grid: Grid
    u0: object
    observation: object
    f: object = None
    scheme: str = DEFAULT_SCHEME
    _cache: dict = field(default_factory=dict, compare=False, repr=False)
    _lock: object = field(default_factory=threading.Lock, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", DegeneracyKind.parse(self.kind))
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        object.__setattr__(self, "initial", tuple(float(v) for v in self.initial))
        n = len(self.free)
        if not (len(self.bounds) == len(self.initial) == n) or n == 0:
            raise ValueError("free, bounds and initial must have the same nonzero length")
        for name, (lo, hi), p in zip(self.free, self.bounds, self.initial):
            if not lo < p < hi:
                raise ValueError(f"initial {name}={p} not strictly inside ({lo}, {hi})")
            if name == "alpha":
                if not (self.kind.admits(lo) and self.kind.admits(hi)):
                    raise ValueError(f"alpha bounds ({lo}, {hi}) leave the {self.kind.value} regime")
        if self.observation.grid != self.grid:
            raise ValueError("observation lives on a different grid")
        self.model_for(self.initial)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def model_for(self, params) -> DiffusionModel:
        return self.base_model.with_parameters(**dict(zip(self.free, map(float, params))))

    def trajectory(self, params):
        return solve_parabolic(self.model_for(params), self.kind, self.grid, self.u0,
                               self.f, scheme=self.scheme)

    def cost(self, params) -> float:
        """Memoized cost; nonadmissible coefficients cost +inf."""
        key = tuple(float(p) for p in params)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        if isinstance(self.observation, InteriorObservation):
            val = cost_interior(key, self)
        else:
            val = cost_boundary(key, self)
        with self._lock:
            self._cache[key] = val
        return val

    def with_observation(self, obs) -> "InverseProblemSpec":
        return replace(self, observation=obs, _cache={}, _lock=threading.Lock())


def _safe_traj(params, spec):
    try:
        return spec.trajectory(params)
    except (ValueError, FloatingPointError):
        return None


def cost_interior(params, spec: InverseProblemSpec) -> float:
    """J = 1/2 int (gamma - u_t(t0))^2 + 1/2 int (beta - w u_x(t0))^2."""
    obs = spec.observation
    if not isinstance(obs, InteriorObservation):
        raise TypeError("cost_interior needs an interior observation")
    traj = _safe_traj(params, spec)
    if traj is None:
        return math.inf
    gamma, beta = measure_interior(traj, obs.t0, obs.weight)
    dx = spec.grid.dx
    return float(0.5 * np.trapezoid((gamma - obs.gamma) ** 2, dx=dx)
                 + 0.5 * np.trapezoid((beta - obs.beta) ** 2, dx=dx))


def cost_boundary(params, spec: InverseProblemSpec) -> float:
    """J = 1/2 int_0^T (eta - u_x(ell, t))^2 dt."""
    obs = spec.observation
    if not isinstance(obs, BoundaryFluxObservation):
        raise TypeError("cost_boundary needs a boundary flux observation")
    traj = _safe_traj(params, spec)
    if traj is None:
        return math.inf
    r = measure_boundary_flux(traj) - obs.eta
    return float(0.5 * np.trapezoid(r * r, dx=spec.grid.dt))


def gradient_fd(params, cost, bounds=None, executor=None) -> np.ndarray:
    """Finite-difference gradient with steps h_k = max(1e-6, 1e-6 |p_k|).

    ``cost`` is an InverseProblemSpec or any callable of the parameter
    vector.  Central differences are used unless a step would leave the
    box, in which case a second-order one-sided formula is used.  With an
    executor the evaluations run concurrently but are reduced in a fixed
    order.
    """
    if isinstance(cost, InverseProblemSpec):
        if bounds is None:
            bounds = cost.bounds
        cost = cost.cost
    p = np.asarray(params, dtype=np.float64)
    n = p.size
    if bounds is None:
        bounds = [(-math.inf, math.inf)] * n
    points, plan = [], []
    for k in range(n):
        h = max(1e-6, 1e-6 * abs(p[k]))
        lo, hi = bounds[k]
        if p[k] - h >= lo and p[k] + h <= hi:
            offs, coef = (h, -h), (0.5 / h, -0.5 / h)
        elif p[k] + 2 * h <= hi:
            offs, coef = (0.0, h, 2 * h), (-1.5 / h, 2.0 / h, -0.5 / h)
        else:
            offs, coef = (0.0, -h, -2 * h), (1.5 / h, -2.0 / h, 0.5 / h)
        idx = []
        for o in offs:
            q = p.copy()
            q[k] += o
            idx.append(len(points))
            points.append(q)
        plan.append((idx, coef))
    if executor is None:
        vals = [cost(q) for q in points]
    else:
        vals = list(executor.map(cost, points))
    g = np.empty(n)
    for k, (idx, coef) in enumerate(plan):
        g[k] = sum(c * vals[i] for i, c in zip(idx, coef))
    return g


@dataclass
class InversionResult:
    names: tuple
    params: np.ndarray
    cost: float
    cost_history: list
    param_history: list
    iterations: int
    reason: str
    wall_time: float
    evaluations: int = 0
    gradient: np.ndarray | None = None
    mu_hat: float | None = None
    warnings: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "params": {k: float(v) for k, v in zip(self.names, self.params)},
            "cost": float(self.cost),
            "iterations": int(self.iterations),
            "reason": self.reason,
            "wall_time": float(self.wall_time),
            "evaluations": int(self.evaluations),
            "gradient": None if self.gradient is None else [float(v) for v in self.gradient],
            "mu_hat": self.mu_hat,
            "warnings": list(self.warnings),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "cost", *self.names])
            for it, (c, p) in enumerate(zip(self.cost_history, self.param_history)):
                w.writerow([it, format(c, ".17g"), *(format(v, ".17g") for v in p)])


def lower_bound_estimate(spec: InverseProblemSpec):
    """mu_hat = int x^alpha |u_x(t0)|^2 recovered from the beta channel.

    Only defined for interior data; alpha is the base model's value.
    """
    obs = spec.observation
    if not isinstance(obs, InteriorObservation):
        return None
    g = spec.grid
    alpha = spec.base_model.alpha
    w = obs.weight(g.x[1:], obs.alpha if obs.alpha is not None else alpha)
    ux = obs.beta[1:] / w
    integrand = np.concatenate(([0.0], g.x[1:] ** alpha * ux * ux))
    if alpha == 0.0:
        integrand[0] = integrand[1]
    return float(np.trapezoid(integrand, dx=g.dx))


def _project(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def minimize(spec: InverseProblemSpec, max_iter: int = MAX_ITER, executor=None,
             cost=None, cost_tol: float = COST_TOL, pgrad_tol: float = PGRAD_TOL) -> InversionResult:
    """Projected BFGS with Armijo backtracking along the projected path.

    Stops when the cost drops to ``cost_tol`` (1e-22), the projected
    gradient to ``pgrad_tol`` (1e-12), after ``max_iter`` iterations, or when
    no step decreases the cost.  ``cost`` replaces ``spec.cost`` when given.
    """
    t_start = time.perf_counter()
    J = spec.cost if cost is None else cost
    lo, hi = spec.lower, spec.upper
    width = hi - lo
    n_eval = [0]

    def f(p):
        n_eval[0] += 1
        return J(p)

    notes = []
    mu = lower_bound_estimate(spec) if cost is None else None
    if mu is not None and mu < LB_THRESHOLD:
        notes.append(f"lower-bound hypothesis weak: mu_hat={mu:.3g} < {LB_THRESHOLD:g}")

    x = _project(np.array(spec.initial, dtype=np.float64), lo, hi)
    fx = f(x)
    g = gradient_fd(x, f, spec.bounds, executor)
    n_eval[0] += 0 if executor is None else 2 * x.size
    if not np.all(np.isfinite(g)) or not math.isfinite(fx):
        raise FloatingPointError("cost or gradient not finite at the initial guess")
    if np.all(g == 0.0):
        notes.append("zero gradient at the initial guess")
    costs, iterates = [fx], [x.copy()]
    H = np.eye(x.size)
    scaled = False
    reason = "max_iterations"
    it = 0
    while True:
        pg = x - _project(x - g, lo, hi)
        if fx <= cost_tol:
            reason = "cost_tolerance"
            break
        if np.linalg.norm(pg) <= pgrad_tol:
            reason = "gradient_tolerance"
            break
        if it >= max_iter:
            break
        active = ((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0))
        freem = ~active
        d = np.zeros_like(x)
        Hf = H[np.ix_(freem, freem)]
        d[freem] = -Hf @ g[freem]
        if not g @ d < 0:
            H = np.eye(x.size)
            scaled = False
            d = np.where(freem, -g, 0.0)
        if not scaled:
            # first step: move at most a fifth of the box in any coordinate
            r = np.max(np.abs(d) / width)
            if r > 0:
                d *= 0.2 / r
        step = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS + 1):
            xn = _project(x + step * d, lo, hi)
            s = xn - x
            if not np.any(s):
                break
            fn = f(xn)
            if fn <= fx + ARMIJO_C1 * (g @ s):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            reason = "line_search_stall"
            break
        gn = gradient_fd(xn, f, spec.bounds, executor)
        y = gn - g
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y) and sy > 0:
            if not scaled:
                H = np.eye(x.size) * (sy / float(y @ y))
                scaled = True
            rho = 1.0 / sy
            V = np.eye(x.size) - rho * np.outer(s, y)
            H = V @ H @ V.T + rho * np.outer(s, s)
        x, fx, g = xn, fn, gn
        it += 1
        costs.append(fx)
        iterates.append(x.copy())
    return InversionResult(
        names=spec.free, params=x, cost=fx, cost_history=costs, param_history=iterates,
        iterations=it, reason=reason, wall_time=time.perf_counter() - t_start,
        evaluations=n_eval[0], gradient=g, mu_hat=mu, warnings=notes,
    )


def estimate_order(iterates, truth, lo: float = 1e-12, hi: float = 1e-1):
    """Fit log|e_{n+1}| = log C + kappa log|e_n| over usable pairs.

    A pair is usable when both errors lie in (lo, hi).  Vector iterates use
    the max-norm.  Returns (C, kappa).
    """
    arr = np.asarray(iterates, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if arr.ndim == 1:
        e = np.abs(arr - t)
    else:
        e = np.max(np.abs(arr - t), axis=1)
    ok = (e > lo) & (e < hi)
    pairs = [(e[i], e[i + 1]) for i in range(len(e) - 1) if ok[i] and ok[i + 1]]
    if len(pairs) < 3:
        raise ValueError(f"only {len(pairs)} usable error pairs, need at least 3")
    a = np.log([p[0] for p in pairs])
    b = np.log([p[1] for p in pairs])
    kappa, logc = np.polyfit(a, b, 1)
    return float(math.exp(logc)), float(kappa)


DEFAULT_LEVELS = (0.01, 0.001, 0.0001, 0.00001, 0.0)


def noise_sweep(spec: InverseProblemSpec, levels=DEFAULT_LEVELS, seeds=(0,),
                executor=None, truth=None) -> list:
    """Rerun the inversion on noisy copies of the observation.

    Level 0 is run once.  Each row carries level, seed, cost, iterations,
    params and, when ``truth`` is given, the max-norm parameter error.
    """
    rows = []
    clean = spec.observation
    for level in levels:
        for seed in (seeds if level > 0 else seeds[:1]):
            obs = add_noise(clean, NoiseSpec(level, int(seed)))
            res = minimize(spec.with_observation(obs), executor=executor)
            row = {"level": float(level), "seed": int(seed), "cost": res.cost,
                   "iterations": res.iterations, "reason": res.reason,
                   "params": {k: float(v) for k, v in zip(res.names, res.params)}}
            if truth is not None:
                row["error"] = float(np.max(np.abs(res.params - np.asarray(truth, dtype=float))))
            rows.append(row)
    return rows
