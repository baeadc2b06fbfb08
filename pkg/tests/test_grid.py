import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfq.errors import ValidationError
from wfq.grid import (Free, Harmonic, PhysicalParams, Quartic, SpaceGrid, Tabulated, TimeGrid,
                      TimeLinearCoupling, first_difference, interpolate_rows, locate, make_grids,
                      potential_from_config, quadrature, second_difference, stencil_matrices)


def test_dirichlet_grid_includes_endpoints():
    g = SpaceGrid(-1.0, 1.0, 5)
    assert g.dx == pytest.approx(0.5)
    assert g.x[0] == -1.0 and g.x[-1] == 1.0
    assert g.weights.sum() == pytest.approx(2.0)


def test_periodic_grid_drops_image_point():
    g = SpaceGrid(0.0, 1.0, 4, "periodic")
    assert g.dx == pytest.approx(0.25)
    np.testing.assert_allclose(g.x, [0.0, 0.25, 0.5, 0.75])
    assert g.weights.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(-1.0, 1.0, 2), (1.0, 1.0, 8), (0.0, np.inf, 8)])
def test_bad_space_grid(args):
    with pytest.raises(ValidationError):
        SpaceGrid(*args)


@pytest.mark.parametrize("T,N", [(1.0, 1), (0.0, 8), (-1.0, 8)])
def test_bad_time_grid(T, N):
    with pytest.raises(ValidationError):
        TimeGrid(T, N)


def test_time_grid_and_rescaled_hbar():
    tg = TimeGrid(2.0, 8)
    assert tg.eps == 0.25
    assert tg.t[-1] == 2.0
    assert tg.refined().N == 16
    params = PhysicalParams(1.0, 3.0, tg.eps)
    assert params.hbar_tilde == pytest.approx(0.75)
    with pytest.raises(ValidationError):
        PhysicalParams(mass=0.0)


def test_make_grids_reports_missing_field():
    with pytest.raises(ValidationError, match="x_max"):
        make_grids({"x_min": 0, "M": 8}, {"T": 1, "N": 4})
    sg, tg, params = make_grids({"x_min": 0, "x_max": 1, "M": 8, "boundary": "periodic"}, {"T": 1, "N": 4})
    assert sg.periodic and params.eps == tg.eps


def test_trapezoid_exact_for_linear():
    g = SpaceGrid(-2.0, 3.0, 11)
    assert quadrature(g, 2.0 * g.x + 1.0) == pytest.approx(2.0 * (9 - 4) / 2 + 5.0)


def test_periodic_quadrature_spectral_for_trig():
    g = SpaceGrid(0.0, 2 * np.pi, 16, "periodic")
    assert quadrature(g, np.cos(g.x) ** 2) == pytest.approx(np.pi, abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_quadrature_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    g = SpaceGrid(-1.0, 2.0, 9)
    f, h = rng.normal(size=(2, 9))
    assert quadrature(g, a * f + b * h) == pytest.approx(a * quadrature(g, f) + b * quadrature(g, h), abs=1e-12)


def test_stencils_exact_on_quadratics_interior():
    g = SpaceGrid(-1.0, 1.0, 21)
    f = 3 * g.x**2 - g.x
    np.testing.assert_allclose(first_difference(g, f)[1:-1], (6 * g.x - 1)[1:-1], atol=1e-12)
    np.testing.assert_allclose(second_difference(g, f)[1:-1], 6.0, atol=1e-9)


def test_stencil_matrices_match_functions():
    for bc in ("dirichlet", "periodic"):
        g = SpaceGrid(-1.0, 1.0, 7, bc)
        f = np.exp(g.x) + 1j * g.x
        d1, d2 = stencil_matrices(g)
        np.testing.assert_allclose(d1 @ f, first_difference(g, f), atol=1e-13)
        np.testing.assert_allclose(d2 @ f, second_difference(g, f), atol=1e-11)


def test_periodic_difference_second_order():
    errs = []
    for M in (32, 64):
        g = SpaceGrid(0.0, 2 * np.pi, M, "periodic")
        errs.append(np.max(np.abs(second_difference(g, np.sin(g.x)) + np.sin(g.x))))
    assert np.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.05)


def test_locate_snaps_to_nodes_and_rejects_outside():
    g = SpaceGrid(0.0, 1.0, 11)
    j0, j1, w = locate(g, [0.3 + 1e-12, 1.0])
    assert w[0] == 0.0 and j0[0] == 3
    assert j1[1] == 10 and w[1] == 1.0
    with pytest.raises(ValidationError):
        locate(g, [1.5])


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-3.0, 3.0), slope=st.floats(-4, 4))
def test_interpolation_exact_for_linear_fields(x, slope):
    g = SpaceGrid(-3.0, 3.0, 13)
    fields = np.array([slope * g.x + 1.0])
    assert interpolate_rows(g, fields, [x])[0] == pytest.approx(slope * x + 1.0, abs=1e-12)


def test_periodic_interpolation_wraps():
    g = SpaceGrid(0.0, 4.0, 4, "periodic")
    vals = np.array([[0.0, 1.0, 2.0, 3.0]])
    assert interpolate_rows(g, vals, [3.5])[0] == pytest.approx(1.5)


def test_potentials_and_derivatives():
    p = PhysicalParams(2.0, 1.0, 0.1)
    x = np.linspace(-1, 1, 5)
    h = Harmonic(3.0)
    np.testing.assert_allclose(h(x, 0, p), 0.5 * 2 * 9 * x**2)
    np.testing.assert_allclose(h.grad(x, 0, p), 18 * x)
    np.testing.assert_allclose(Quartic(0.5).curvature(x, 0, p), 6 * x**2)
    c = TimeLinearCoupling(2.0)
    assert c.time_dependent and c(1.0, 0.5, p) == pytest.approx(1.0)
    assert np.all(Free()(x, 0, p) == 0)
    with pytest.raises(ValidationError):
        Harmonic(-1.0)


def test_tabulated_bilinear_and_bounds():
    sg, tg = SpaceGrid(0.0, 1.0, 5), TimeGrid(1.0, 4)
    vals = np.add.outer(2 * tg.t, 3 * sg.x)
    tab = Tabulated(vals, sg, tg)
    assert tab(0.33, 0.41) == pytest.approx(2 * 0.41 + 3 * 0.33)
    assert tab.grad(0.6, 0.2) == pytest.approx(3.0)
    with pytest.raises(ValidationError):
        tab(1.2, 0.0)
    with pytest.raises(ValidationError):
        Tabulated(vals[:, :3], sg, tg)


def test_potential_from_config():
    assert isinstance(potential_from_config({"kind": "harmonic", "omega": "2"}), Harmonic)
    assert isinstance(potential_from_config({"kind": "free"}), Free)
    with pytest.raises(ValidationError):
        potential_from_config({"kind": "morse"})
