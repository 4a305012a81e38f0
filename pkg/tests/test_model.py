import numpy as np
import pytest

from degenerate_diffusion.grid import Grid
from degenerate_diffusion.model import (AffineProfile, DegeneracyKind, DiffusionModel, QuadraticProfile,
                                        TabulatedProfile, cell_conductance, coefficient_at_half_nodes)


def test_kind_compatibility():
    assert DegeneracyKind.WEAK.admits(0.5)
    assert not DegeneracyKind.WEAK.admits(1.0)
    assert DegeneracyKind.STRONG.admits(1.0) and DegeneracyKind.STRONG.admits(1.99)
    assert not DegeneracyKind.STRONG.admits(2.0)
    assert DegeneracyKind.NONDEGENERATE.admits(0.0)
    with pytest.raises(ValueError):
        DegeneracyKind.WEAK.check(1.2)
    assert DegeneracyKind.for_alpha(0.3) is DegeneracyKind.WEAK
    assert DegeneracyKind.parse("strong") is DegeneracyKind.STRONG


def test_model_rejects_alpha_outside_range():
    with pytest.raises(ValueError):
        DiffusionModel.power(2.0)
    with pytest.raises(ValueError):
        DiffusionModel.power(-0.5)


def test_constant_nondegenerate_coefficient_is_one():
    g = Grid(1.0, 20, 1.0, 8)
    np.testing.assert_array_equal(coefficient_at_half_nodes(DiffusionModel.constant(1.0, 0.0), g), 1.0)


def test_power_one_coefficient_is_identity():
    # dx = 0.25 with the minimum admissible node count
    g = Grid(2.25, 8, 1.0, 8)
    k = coefficient_at_half_nodes(DiffusionModel.power(1.0), g)
    np.testing.assert_allclose(k, 0.125 + 0.25 * np.arange(9), rtol=1e-15)


def test_affine_profile_value():
    g = Grid(1.0, 8, 1.0, 8)
    assert g.x_half[4] == pytest.approx(0.5)
    k = coefficient_at_half_nodes(DiffusionModel.power_profile(0.6, AffineProfile(5.0, 1.5)), g)
    assert k[4] == pytest.approx(0.5 ** 0.6 * 4.0, rel=1e-14)
    assert abs(k[4] - 2.6390) < 1e-4


def test_nonpositive_coefficient_rejected():
    g = Grid(1.0, 20, 1.0, 8)
    with pytest.raises(ValueError):
        coefficient_at_half_nodes(DiffusionModel.power_profile(0.5, AffineProfile(-5.0, 1.0)), g)
    with pytest.raises(ValueError):
        DiffusionModel.power_profile(0.5, AffineProfile(-5.0, 1.0)).check_lower_bound(g)


def test_parameters_roundtrip():
    m = DiffusionModel.power_profile(0.6, QuadraticProfile(4.0, 3.0, 1.0))
    assert m.parameters() == {"alpha": 0.6, "b": 4.0, "c": 3.0, "h": 1.0}
    m2 = m.with_parameters(b=1.0, alpha=0.3)
    assert m2.parameters() == {"alpha": 0.3, "b": 1.0, "c": 3.0, "h": 1.0}
    with pytest.raises(KeyError):
        m.with_parameters(a=1.0)


def test_tabulated_profile_interpolates():
    p = TabulatedProfile((0.0, 1.0), (1.0, 3.0))
    np.testing.assert_allclose(p(np.array([0.0, 0.5, 1.0])), [1.0, 2.0, 3.0])


def test_weak_conductance_matches_midpoint_away_from_origin():
    g = Grid(1.0, 200, 1.0, 8)
    m = DiffusionModel.power(0.4)
    mid = coefficient_at_half_nodes(m, g)
    cell = cell_conductance(m, g, DegeneracyKind.WEAK)
    rel = np.abs(cell / mid - 1.0)
    assert rel[100:].max() < 1e-5
    # first cell: exact integral of x^-alpha over (0, dx)
    assert cell[0] == pytest.approx(g.dx * 0.6 / g.dx ** 0.6, rel=1e-13)
    np.testing.assert_array_equal(cell_conductance(DiffusionModel.power(1.3), g, DegeneracyKind.STRONG),
                                  coefficient_at_half_nodes(DiffusionModel.power(1.3), g))
