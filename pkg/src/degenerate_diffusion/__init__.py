"""Identification of degenerate diffusion coefficients x^alpha a(x).

Forward heat and wave solvers, synthetic observations, least-squares
inversion and numerical checks of the underlying inequalities.
"""
from ._kernels import BACKEND
from .grid import Field, Grid, l2_norm_sq, weighted_h1_seminorm_sq
from .model import (AffineProfile, ConstantProfile, DegeneracyKind, DiffusionModel,
                    QuadraticProfile, TabulatedProfile, coefficient_at_half_nodes)
from .parabolic import Trajectory, dissipativity_check, solve_parabolic

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Field", "Grid", "l2_norm_sq", "weighted_h1_seminorm_sq",
    "AffineProfile", "ConstantProfile", "DegeneracyKind", "DiffusionModel",
    "QuadraticProfile", "TabulatedProfile", "coefficient_at_half_nodes",
    "Trajectory", "dissipativity_check", "solve_parabolic",
]
