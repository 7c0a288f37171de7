import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radmass.chart import (
    ChartError,
    GridError,
    build_chart,
    build_radial_grid,
    ddr,
    dx,
    integrate_N,
    trapezoid_r,
)


def test_grid_samples_and_spacing():
    g = build_radial_grid(0.0, 1.0, 11)
    assert g.dr == pytest.approx(0.1)
    assert g.r[0] == 0.0 and g.r[-1] == 1.0
    assert g.index_of(0.31) == 3


def test_grid_inset_moves_endpoints():
    g = build_radial_grid(0.0, math.pi, 101, inset=0.05)
    assert g.start == pytest.approx(0.05)
    assert g.stop == pytest.approx(math.pi - 0.05)


def test_refined_grid_keeps_old_samples():
    g = build_radial_grid(-1.0, 2.0, 31)
    fine = g.refined(3)
    assert fine.nr == 91
    np.testing.assert_allclose(fine.r[::3], g.r, atol=1e-14)


@pytest.mark.parametrize(
    "args",
    [(0.0, 1.0, 4), (1.0, 1.0, 10), (0.0, math.inf, 10), (0.0, 1.0, 10, 0.6), (0.0, 1.0, 10, -0.1)],
)
def test_invalid_grids_raise(args):
    with pytest.raises(GridError):
        build_radial_grid(*args)


def test_sphere_weights_sum_to_area():
    chart = build_chart("latlong-sphere", 2, (16, 32), "round")
    assert chart.volume == pytest.approx(4 * math.pi, abs=1e-12)
    assert chart.n == 3


def test_sphere_quadrature_of_z_squared():
    chart = build_chart("latlong-sphere", 2, (64, 32), "round")
    theta = chart.coords[0]
    value = integrate_N(np.cos(theta) ** 2, chart)
    assert value == pytest.approx(4 * math.pi / 3, rel=1e-3)


def test_torus_volume_and_flat_metric():
    chart = build_chart("periodic-box", 2, 8)
    assert chart.volume == pytest.approx(4 * math.pi**2)
    np.testing.assert_array_equal(chart.ghat[0, 0], np.eye(2))


def test_torus_with_expression_metric():
    chart = build_chart("periodic-box", 1, 64, "(2 + cos(x1))^2")
    # length of the circle with line element (2 + cos x) dx
    assert chart.volume == pytest.approx(4 * math.pi, rel=1e-12)


def test_chart_rejections():
    with pytest.raises(ChartError):
        build_chart("latlong-sphere", 1, 16, "round")
    with pytest.raises(ChartError):
        build_chart("periodic-box", 2, 4)
    with pytest.raises(ChartError):
        build_chart("periodic-box", 1, 16, "-1")
    with pytest.raises(ChartError):
        build_chart("klein-bottle", 2, 8)


def test_scaled_chart_volume():
    chart = build_chart("periodic-box", 3, 8)
    scaled = chart.scaled(4.0)
    assert scaled.volume == pytest.approx(chart.volume * 8)
    np.testing.assert_allclose(scaled.ghat, 4 * chart.ghat)


def test_ddr_exact_on_quadratics_everywhere():
    g = build_radial_grid(-1, 2, 21)
    f = 3 * g.r**2 - g.r + 5
    np.testing.assert_allclose(ddr(f, g), 6 * g.r - 1, atol=1e-11)
    np.testing.assert_allclose(ddr(f, g, order=2), 6.0, atol=1e-9)


def test_ddr_second_derivative_exact_on_cubics():
    g = build_radial_grid(0, 1, 41)
    f = g.r**3
    np.testing.assert_allclose(ddr(f, g, order=2), 6 * g.r, atol=1e-8)


@pytest.mark.parametrize("order", [1, 2])
def test_ddr_converges_at_second_order(order):
    errs = []
    for nr in (101, 201):
        g = build_radial_grid(0, 2, nr)
        exact = np.cos(g.r) if order == 1 else -np.sin(g.r)
        errs.append(np.max(np.abs(ddr(np.sin(g.r), g, order=order) - exact)))
    assert errs[0] / errs[1] > 3.5


def test_ddr_carries_trailing_axes():
    g = build_radial_grid(0, 1, 11)
    f = np.stack([g.r, 2 * g.r], axis=1)[..., None]
    out = ddr(f, g)
    assert out.shape == f.shape
    np.testing.assert_allclose(out[:, 1, 0], 2.0)


def test_ddr_rejects_short_input():
    g = build_radial_grid(0, 1, 11)
    with pytest.raises(GridError):
        ddr(np.zeros(3), g)
    with pytest.raises(ValueError):
        ddr(np.zeros(11), g, order=3)


def test_periodic_differences():
    chart = build_chart("periodic-box", 1, 64)
    x = chart.coords[0][None, :]
    np.testing.assert_allclose(dx(np.sin(x), chart, 0), np.cos(x), atol=2e-3)
    np.testing.assert_allclose(dx(np.sin(x), chart, 0, order=2), -np.sin(x), atol=2e-3)
    sphere = build_chart("latlong-sphere", 2, (8, 16), "round")
    with pytest.raises(ChartError):
        dx(np.zeros((3, 8, 16)), sphere, 0)


def test_integrate_rejects_bad_fields():
    chart = build_chart("periodic-box", 2, 8)
    with pytest.raises(ChartError):
        integrate_N(np.zeros((3, 8, 9)), chart)
    bad = np.zeros((8, 8))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        integrate_N(bad, chart)


def test_trapezoid_radial():
    g = build_radial_grid(0, 1, 101)
    assert trapezoid_r(g.r**2, g) == pytest.approx(1 / 3, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-5, 5),
    length=st.floats(0.5, 5),
    c=st.lists(st.floats(-3, 3), min_size=3, max_size=3),
)
def test_ddr_exact_for_any_quadratic(a, length, c):
    g = build_radial_grid(a, a + length, 17)
    f = c[0] + c[1] * g.r + c[2] * g.r**2
    np.testing.assert_allclose(ddr(f, g), c[1] + 2 * c[2] * g.r, atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=2))
def test_ddr_is_linear(coef):
    g = build_radial_grid(0, 1, 21)
    f1, f2 = np.exp(g.r), np.cos(3 * g.r)
    lhs = ddr(coef[0] * f1 + coef[1] * f2, g)
    rhs = coef[0] * ddr(f1, g) + coef[1] * ddr(f2, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)
