"""Numerical checks of the inequalities behind uniqueness and stability."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Grid, l2_norm_sq, weighted_h1_seminorm_sq
from .inversion import InverseProblemSpec, minimize
from .model import DegeneracyKind, DiffusionModel
from .observations import InteriorObservation
from .parabolic import solve_parabolic


# Poincare -------------------------------------------------------------------

def poincare_constant(alpha: float, ell: float) -> float:
    """C_p with int u^2 <= C_p int x^alpha u_x^2 on (0, ell).

    ell (1 - log ell) for alpha = 1 (ell <= 1 only), ell^(2-alpha) / (2-alpha)
    otherwise.
    """
    if not (0.0 <= alpha < 2.0):
        raise ValueError(f"alpha must lie in [0, 2), got {alpha}")
    if not ell > 0:
        raise ValueError("ell must be positive")
    if alpha == 1.0:
        if ell > 1.0:
            raise ValueError("the alpha = 1 constant needs ell <= 1")
        return ell * (1.0 - math.log(ell))
    return ell ** (2.0 - alpha) / (2.0 - alpha)


def _needs_left_zero(alpha: float) -> bool:
    return alpha < 1.0


def random_admissible_samples(alpha: float, grid: Grid, n: int, seed: int = 0,
                              knots=(2, 20)) -> list:
    """Random piecewise-linear Fields vanishing at ell (and at 0 when alpha < 1)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = int(rng.integers(knots[0], knots[1] + 1))
        xs = np.concatenate(([0.0], np.sort(rng.uniform(0.0, grid.ell, k)), [grid.ell]))
        ys = rng.uniform(-1.0, 1.0, k + 2)
        ys[-1] = 0.0
        if _needs_left_zero(alpha):
            ys[0] = 0.0
        out.append(Field(grid, np.interp(grid.x, xs, ys)))
    return out


@dataclass
class PoincareReport:
    alpha: float
    ell: float
    constant: float
    max_ratio: float
    ratios: np.ndarray
    passed: bool


def verify_poincare(samples, alpha: float, ell: float | None = None,
                    rtol: float = 1e-2) -> PoincareReport:
    """Largest int u^2 / int x^alpha u_x^2 over the samples, against C_p."""
    ratios = []
    for u in samples:
        g, v = u.grid, u.values
        if ell is not None and abs(g.ell - ell) > 1e-12 * ell:
            raise ValueError("sample grid length differs from ell")
        scale = max(1.0, float(np.max(np.abs(v))))
        if abs(v[-1]) > 1e-12 * scale or (_needs_left_zero(alpha) and abs(v[0]) > 1e-12 * scale):
            raise ValueError("sample violates the boundary constraints")
        den = weighted_h1_seminorm_sq(u, alpha)
        if den == 0.0:
            continue
        ratios.append(l2_norm_sq(u) / den)
    if not ratios:
        raise ValueError("no nonzero samples")
    ell = samples[0].grid.ell if ell is None else ell
    cp = poincare_constant(alpha, ell)
    r = np.array(ratios)
    return PoincareReport(alpha, ell, cp, float(r.max()), r, bool(r.max() <= cp * (1 + rtol)))


# Lipschitz stability -------------------------------------------------------------

@dataclass
class StabilityReport:
    lhs: float = 0.0
    rhs: float = 0.0
    constant: float = math.nan
    mu_hat: float = math.nan
    passed: bool = False
    proof_constant: float = math.nan
    quotients: np.ndarray = field(default_factory=lambda: np.zeros(0))
    details: dict = field(default_factory=dict)


def _snapshot(model, kind, grid, u0, t0):
    traj = solve_parabolic(model, kind, grid, u0)
    n = grid.time_index(t0)
    u = traj.u
    ut = (25 * u[n] - 48 * u[n - 1] + 36 * u[n - 2] - 16 * u[n - 3] + 3 * u[n - 4]) / (12 * grid.dt)
    return u[n], ut


def lipschitz_stability_check(p1: float, p2: float, family: str = "linear", ell: float | None = None,
                              t0: float = 0.2, u0=None, nx: int = 200, nt: int = 400,
                              a_bounds=(0.2, 1.7), tol: float = 5e-2) -> StabilityReport:
    """Check |p2 - p1| <= C * residual for two coefficients sharing all data.

    family "linear": p = a, alpha = 1, residual
      (int |w_t|^2 + x |w_x|^2)^(1/2),  C = (sqrt(C_p) + a_high) / mu_hat.
    family "power": p = alpha (same regime), ell < 1, residual
      (int |w_t|^2 + x^(a1 v a2) |w_x|^2)^(1/2),
      C = (sqrt(C_p(alpha_min)) + ell^((a_max - a_min)/2)) / (ell (1 - ell) mu_hat).
    Here w = u_2 - u_1 at t0 and mu_hat is the lower bound of
    int x^alpha |u_x(t0)|^2.
    """
    if family == "linear":
        ell = 1.0 if ell is None else ell
        u0 = (lambda x: 0.5 * x ** 2 * (1 - x)) if u0 is None else u0
        grid = Grid(ell, nx, t0, nt)
        kind = DegeneracyKind.STRONG
        models = [DiffusionModel.constant(p1, 1.0), DiffusionModel.constant(p2, 1.0)]
        weights = (1.0, 1.0)
    elif family == "power":
        ell = 0.9 if ell is None else ell
        if not 0.0 < ell < 1.0:
            raise ValueError("the power-case estimate needs 0 < ell < 1")
        u0 = (lambda x: 0.3 * x ** 2 * (1 - x) ** 2) if u0 is None else u0
        grid = Grid(ell, nx, t0, nt)
        kind = DegeneracyKind.for_alpha(p1)
        if DegeneracyKind.for_alpha(p2) is not kind:
            raise ValueError("both exponents must lie in the same degeneracy regime")
        models = [DiffusionModel.power(p1), DiffusionModel.power(p2)]
        weights = (p1, p2)
    else:
        raise ValueError(f"unknown family {family!r}")

    (u1, ut1), (u2, ut2) = (_snapshot(m, kind, grid, u0, t0) for m in models)
    mus = [weighted_h1_seminorm_sq(u, w, grid) for u, w in zip((u1, u2), weights)]
    lhs = abs(p2 - p1)
    wt = ut2 - ut1
    if family == "linear":
        mu = min(mus)
        cp = poincare_constant(1.0, ell)
        a_high = max(a_bounds[1], p1, p2)
        rhs = math.sqrt(l2_norm_sq(wt, grid) + weighted_h1_seminorm_sq(u2 - u1, 1.0, grid))
        if mu < 1e-10:
            raise ValueError(f"lower-bound hypothesis fails numerically: mu_hat={mu:.3g}")
        C = (math.sqrt(cp) + a_high) / mu
        proof_C = math.sqrt(2.0) * (math.sqrt(cp) + a_high) / math.sqrt(mu)
    else:
        lo, hi = sorted((p1, p2))
        mu = mus[0] if p1 <= p2 else mus[1]
        cp = poincare_constant(lo, ell)
        rhs = math.sqrt(l2_norm_sq(wt, grid) + weighted_h1_seminorm_sq(u2 - u1, hi, grid))
        if mu < 1e-10:
            raise ValueError(f"lower-bound hypothesis fails numerically: mu_hat={mu:.3g}")
        C = (math.sqrt(cp) + ell ** ((hi - lo) / 2.0)) / (ell * (1.0 - ell) * mu)
        proof_C = math.sqrt(2.0) * (math.sqrt(cp) + ell ** ((hi - lo) / 2.0)) / (ell * (1.0 - ell) * math.sqrt(mu))
    passed = lhs <= C * rhs * (1.0 + tol)
    return StabilityReport(lhs=lhs, rhs=rhs, constant=C, mu_hat=mu, passed=bool(passed),
                           proof_constant=proof_C,
                           details={"family": family, "ell": ell, "t0": t0, "C_p": cp})


def stability_quotients(spec: InverseProblemSpec, n_trials: int = 50, eps_max: float = 0.05,
                        seed: int = 0, executor=None, baseline=None,
                        ratio_bound: float = 20.0) -> StabilityReport:
    """K_j = |a0 - a_j| / (||gamma - gamma_j|| + ||beta - beta_j||).

    gamma_j = gamma + eps_j, beta_j = beta + eps_j with eps_j uniform in
    (0, eps_max); a0 is the noiseless recovery (``baseline`` if given) and
    a_j the recovery from the shifted data.
    """
    obs = spec.observation
    if not isinstance(obs, InteriorObservation):
        raise TypeError("stability quotients need interior data")
    if eps_max <= 0:
        raise ValueError("eps_max must be positive")
    rng = np.random.default_rng(seed)
    eps = []
    while len(eps) < n_trials:
        e = rng.uniform(0.0, eps_max)
        if e > 0.0:
            eps.append(e)
    if baseline is None:
        baseline = minimize(spec, executor=executor).params
    a0 = np.asarray(baseline, dtype=np.float64)
    g = spec.grid

    def trial(e):
        shifted = spec.with_observation(
            InteriorObservation(g, obs.t0, obs.gamma + e, obs.beta + e, obs.weight, obs.alpha))
        res = minimize(shifted)
        shift = e * math.sqrt(g.ell)
        return float(np.max(np.abs(res.params - a0))) / (2.0 * shift)

    if executor is None:
        K = np.array([trial(e) for e in eps])
    else:
        K = np.array(list(executor.map(trial, eps)))
    finite = bool(np.all(np.isfinite(K)))
    med = float(np.median(K)) if K.size else math.nan
    ratio = float(np.max(K) / med) if med > 0 else math.inf
    return StabilityReport(quotients=K, passed=finite and ratio <= ratio_bound,
                           details={"eps": np.array(eps), "baseline": a0.tolist(),
                                    "max_over_median": ratio, "median": med,
                                    "max": float(np.max(K))})


# Carleman --------------------------------------------------------------------------

@dataclass
class CarlemanReport:
    s: np.ndarray
    ratios: np.ndarray
    ratio_at_double: float
    passed: bool


def carleman_1d_ratio(f, theta: float = 0.3, delta: float = 0.2, lam: float = 4.0,
                      s_list=(10, 20, 40, 80, 160), f_prime=None, n: int = 200001,
                      growth: float = 1.2) -> CarlemanReport:
    """r(s) = s int f^2 e^{2 s phi} / int f'^2 e^{2 s phi} on (theta + delta, 1).

    phi(x) = exp(lam (x - theta)^2).  ``f`` is a callable, or a Field whose
    grid covers the window (then linearly interpolated).  Bounded means
    r(2 s_max) <= 1.2 r(s_max).
    """
    left = theta + delta
    if not 0.0 <= theta < left < 1.0:
        raise ValueError("need 0 <= theta < theta + delta < 1")
    x = np.linspace(left, 1.0, n)
    if isinstance(f, Field):
        if f.grid.ell < 1.0 - 1e-12:
            raise ValueError("field does not reach x = 1")
        vals = np.interp(x, f.grid.x, f.values)
        dvals = np.interp(x, f.grid.x_half, np.diff(f.values) / f.grid.dx)
    else:
        vals = np.asarray(f(x), dtype=np.float64)
        dvals = np.gradient(vals, x, edge_order=2) if f_prime is None else np.asarray(f_prime(x), dtype=np.float64)
    scale = float(np.max(np.abs(vals)))
    if scale == 0.0:
        raise ValueError("f vanishes identically")
    if abs(vals[-1]) > 1e-10 * scale:
        raise ValueError("f must vanish at x = 1")
    phi = np.exp(lam * (x - theta) ** 2)
    s_all = [float(s) for s in s_list] + [2.0 * float(max(s_list))]
    ratios = []
    for s in s_all:
        expo = 2.0 * s * phi
        w = np.exp(expo - expo.max())
        num = s * np.trapezoid(vals * vals * w, x)
        den = np.trapezoid(dvals * dvals * w, x)
        ratios.append(num / den if den > 0 else math.inf)
    r = np.array(ratios)
    passed = bool(np.all(np.isfinite(r)) and r[-1] <= growth * r[-2])
    return CarlemanReport(np.array(s_all[:-1]), r[:-1], float(r[-1]), passed)
