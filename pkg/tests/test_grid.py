import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenerate_diffusion.grid import Field, Grid, l2_norm_sq, weighted_h1_seminorm_sq


def unit_grid(nx=199):
    return Grid(1.0, nx, 1.0, 10)


@pytest.mark.parametrize("kw", [dict(nx=7), dict(nt=7), dict(ell=0.0), dict(ell=-1.0), dict(T=0.0)])
def test_grid_rejects_bad_meshes(kw):
    args = dict(ell=1.0, nx=10, T=1.0, nt=10)
    args.update(kw)
    with pytest.raises(ValueError):
        Grid(**args)


@given(st.floats(0.01, 50.0), st.integers(8, 500))
def test_grid_nodes_span_domain(ell, nx):
    g = Grid(ell, nx, 1.0, 8)
    assert g.x[0] == 0.0
    assert abs(g.x[-1] - ell) <= np.spacing(ell)
    assert g.x.size == nx + 2
    assert g.dx > 0 and g.dt > 0
    assert g.x_half.size == nx + 1


def test_refined_grid_is_nested():
    g = Grid(1.3, 20, 2.0, 16)
    f = g.refined(2, 4)
    assert f.nx == 41 and f.nt == 64
    np.testing.assert_allclose(f.x[::2], g.x, atol=1e-15)
    np.testing.assert_allclose(f.times[::4], g.times, atol=1e-15)


def test_field_checks_length_and_finiteness():
    g = unit_grid(10)
    with pytest.raises(ValueError):
        Field(g, np.zeros(5))
    v = np.zeros(12)
    v[3] = np.nan
    with pytest.raises(ValueError):
        Field(g, v)


def test_l2_norm_examples():
    g = unit_grid()
    assert l2_norm_sq(Field(g, np.zeros(g.n_nodes))) == 0.0
    assert l2_norm_sq(Field(g, np.ones(g.n_nodes))) == pytest.approx(1.0, abs=1e-14)
    assert abs(l2_norm_sq(Field.from_function(g, lambda x: x)) - 1.0 / 3.0) <= 1e-4


def test_l2_rejects_nonfinite_raw_arrays():
    g = unit_grid(10)
    v = np.zeros(12)
    v[0] = np.inf
    with pytest.raises(ValueError):
        l2_norm_sq(v, g)


@given(st.floats(0.05, 20.0), st.integers(8, 300))
def test_quadrature_of_one_returns_length(ell, nx):
    g = Grid(ell, nx, 1.0, 8)
    assert abs(l2_norm_sq(np.ones(g.n_nodes), g) - ell) <= 1e-12 * ell


def test_weighted_seminorm_examples():
    g = unit_grid()
    assert weighted_h1_seminorm_sq(Field(g, np.full(g.n_nodes, 3.0)), 0.7) == 0.0
    assert abs(weighted_h1_seminorm_sq(Field.from_function(g, lambda x: x), 1.0) - 0.5) <= 1e-6
    u = Field.from_function(g, lambda x: np.sin(np.pi * x))
    assert abs(weighted_h1_seminorm_sq(u, 0.0) - np.pi ** 2 / 2) <= 1e-3


@pytest.mark.parametrize("alpha", [-0.1, 2.0, 3.5])
def test_weighted_seminorm_rejects_alpha(alpha):
    g = unit_grid(10)
    with pytest.raises(ValueError):
        weighted_h1_seminorm_sq(np.zeros(12), alpha, g)


def test_l2_error_is_second_order():
    errs = []
    for nx in (49, 99, 199):
        g = unit_grid(nx)
        errs.append(abs(l2_norm_sq(Field.from_function(g, lambda x: x * x)) - 0.2))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=12, max_size=12), st.floats(-1e6, 1e6),
       st.floats(0.0, 1.99))
def test_seminorm_ignores_constant_shift(vals, c, alpha):
    g = unit_grid(10)
    u = np.array(vals)
    a = weighted_h1_seminorm_sq(u, alpha, g)
    b = weighted_h1_seminorm_sq(u + c, alpha, g)
    scale = max(1.0, a) * (1.0 + abs(c) / 1e3) ** 2
    assert abs(a - b) <= 1e-12 * scale * 1e3
    assert a >= 0.0 and l2_norm_sq(u, g) >= 0.0
