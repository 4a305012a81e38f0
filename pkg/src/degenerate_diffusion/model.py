"""Degeneracy regimes and the diffusion coefficient x^alpha a(x)."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid


class DegeneracyKind(enum.Enum):
    """Boundary regime of the operator at x = 0.

    WEAK: 0 < alpha < 1, Dirichlet at both ends.
    STRONG: 1 <= alpha < 2, zero flux x^alpha u_x = 0 at x = 0, Dirichlet at ell.
    NONDEGENERATE: alpha = 0, Dirichlet at both ends (used for oracle checks).
    """

    WEAK = "weak"
    STRONG = "strong"
    NONDEGENERATE = "nondegenerate"

    def admits(self, alpha: float) -> bool:
        if self is DegeneracyKind.WEAK:
            return 0.0 < alpha < 1.0
        if self is DegeneracyKind.STRONG:
            return 1.0 <= alpha < 2.0
        return alpha == 0.0

    def check(self, alpha: float) -> None:
        if not self.admits(alpha):
            raise ValueError(f"alpha={alpha} is not admissible for {self.value} degeneracy")

    @property
    def pinned_left(self) -> bool:
        return self is not DegeneracyKind.STRONG

    @classmethod
    def for_alpha(cls, alpha: float) -> "DegeneracyKind":
        if alpha == 0.0:
            return cls.NONDEGENERATE
        if 0.0 < alpha < 1.0:
            return cls.WEAK
        if 1.0 <= alpha < 2.0:
            return cls.STRONG
        raise ValueError(f"alpha={alpha} outside [0, 2)")

    @classmethod
    def parse(cls, name) -> "DegeneracyKind":
        if isinstance(name, cls):
            return name
        return cls(str(name).lower())


# profiles a(x) ---------------------------------------------------------------

@dataclass(frozen=True)
class ConstantProfile:
    a: float
    names = ("a",)

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=np.float64), self.a)

    def params(self):
        return (self.a,)


@dataclass(frozen=True)
class AffineProfile:
    """a(x) = b x + c"""

    b: float
    c: float
    names = ("b", "c")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.b * x + self.c

    def params(self):
        return (self.b, self.c)


@dataclass(frozen=True)
class QuadraticProfile:
    """a(x) = b x^2 + c x + h"""

    b: float
    c: float
    h: float
    names = ("b", "c", "h")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (self.b * x + self.c) * x + self.h

    def params(self):
        return (self.b, self.c, self.h)


@dataclass(frozen=True)
class TabulatedProfile:
    """a(x) given by values at the half-nodes of some grid, linearly interpolated."""

    x_half: tuple
    values: tuple
    names = ()

    def __post_init__(self):
        object.__setattr__(self, "x_half", tuple(float(v) for v in self.x_half))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.x_half) != len(self.values) or len(self.values) < 2:
            raise ValueError("tabulated profile needs matching x/value tables")

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=np.float64), self.x_half, self.values)

    def params(self):
        return ()


# model ------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffusionModel:
    """Coefficient x^alpha a(x).

    ``bounds`` optionally maps parameter names to (lo, hi); it is carried for
    bookkeeping, the inversion takes its box from the problem definition.
    """

    alpha: float
    profile: object
    bounds: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        if not (0.0 <= self.alpha < 2.0):
            raise ValueError(f"alpha must lie in [0, 2), got {self.alpha}")

    @classmethod
    def constant(cls, a: float, alpha: float = 1.0) -> "DiffusionModel":
        return cls(alpha, ConstantProfile(float(a)))

    @classmethod
    def power(cls, alpha: float) -> "DiffusionModel":
        return cls(alpha, ConstantProfile(1.0))

    @classmethod
    def power_profile(cls, alpha: float, profile) -> "DiffusionModel":
        return cls(alpha, profile)

    def a(self, x):
        return self.profile(x)

    def kappa(self, x):
        x = np.asarray(x, dtype=np.float64)
        return x ** self.alpha * self.profile(x)

    def parameters(self) -> dict:
        out = {"alpha": self.alpha}
        out.update(zip(self.profile.names, self.profile.params()))
        return out

    def with_parameters(self, **values) -> "DiffusionModel":
        """Copy with some of alpha, a, b, c, h replaced."""
        alpha = values.pop("alpha", self.alpha)
        prof = self.profile
        if values:
            unknown = set(values) - set(prof.names)
            if unknown:
                raise KeyError(f"profile {type(prof).__name__} has no parameter(s) {sorted(unknown)}")
            prof = replace(prof, **{k: float(v) for k, v in values.items()})
        return DiffusionModel(alpha, prof, self.bounds)

    def check_lower_bound(self, grid: Grid, a_lower: float = 0.0) -> float:
        """Minimum of a(x) over half-nodes and both ends; raises if <= a_lower."""
        pts = np.concatenate(([0.0], grid.x_half, [grid.ell]))
        amin = float(np.min(self.profile(pts)))
        if not amin > a_lower:
            raise ValueError(f"a(x) reaches {amin:.6g}, must stay above {a_lower}")
        return amin


def coefficient_at_half_nodes(model: DiffusionModel, grid: Grid) -> np.ndarray:
    """kappa_{i+1/2} = x_{i+1/2}^alpha a(x_{i+1/2}), length nx+1."""
    k = model.kappa(grid.x_half)
    if not np.all(np.isfinite(k)) or np.any(k <= 0.0):
        raise ValueError("diffusion coefficient is not strictly positive on the grid")
    return k


def cell_conductance(model: DiffusionModel, grid: Grid, kind: DegeneracyKind) -> np.ndarray:
    """Interface conductances used by the solvers.

    Under weak degeneracy the power is integrated exactly over each cell:
    kappa = a(x_{i+1/2}) dx / int_{x_i}^{x_{i+1}} s^-alpha ds.  This follows the
    x^(1-alpha) behaviour of solutions near 0 instead of under-resolving it in
    the first cell.  Other regimes use the midpoint values.
    """
    k = coefficient_at_half_nodes(model, grid)
    alpha = model.alpha
    if kind is DegeneracyKind.WEAK and 0.0 < alpha < 1.0:
        p = 1.0 - alpha
        xn = np.arange(grid.nx + 2) * grid.dx
        integral = np.diff(xn ** p) / p
        k = model.a(grid.x_half) * grid.dx / integral
    return k
