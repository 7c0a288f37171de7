import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radmass.asymptotics import (
    BAR_TYPE,
    F_TYPE,
    DivergenceError,
    ProvenanceError,
    asymptotic_spec,
    estimator_base,
    estimator_infinity,
    extrapolate_limit,
    f_samples,
    tail_integral,
)
from radmass.chart import build_chart, build_radial_grid
from radmass.curvature import shape_bundle
from radmass.mass import radial_mass
from radmass.metric import background_family, eval_metric_family, make_background, make_perturbed_family

TORUS = build_chart("periodic-box", 2, 8)
SPHERE = build_chart("latlong-sphere", 2, (16, 32), "round")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 50))
def test_tail_integral_euclidean(r):
    value, ok = tail_integral(lambda s: s**-2, r, math.inf)
    assert ok and value == pytest.approx(1 / r, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 10))
def test_tail_integral_hyperbolic(r):
    value, ok = tail_integral(lambda s: math.exp(-2 * s), r, math.inf)
    assert ok and value == pytest.approx(0.5 * math.exp(-2 * r), abs=1e-8)


def test_tail_integral_detects_divergence():
    assert not tail_integral(lambda s: 1.0, 0.0, math.inf)[1]
    assert not tail_integral(lambda s: 1 / s, 1.0, math.inf)[1]
    assert not tail_integral(lambda s: s**-2, 1.0, 0.0)[1]
    assert tail_integral(lambda s: 1.0, 0.5, 1.0) == (pytest.approx(0.5), True)


def test_f_samples_closed_forms():
    grid = build_radial_grid(0.5, 20, 101)
    F = f_samples(make_background("euclidean", grid, SPHERE), math.inf)
    np.testing.assert_allclose(F, 1 / grid.r, atol=1e-8)
    grid = build_radial_grid(0, 5, 101)
    F = f_samples(make_background("hyperbolic", grid, TORUS), math.inf)
    np.testing.assert_allclose(F, 0.5 * np.exp(-2 * grid.r), atol=1e-8)
    assert np.all(np.diff(F) < 0) and np.all(F > 0)


def test_classification():
    grid = build_radial_grid(0, 2, 41)
    hyp = make_background("hyperbolic", grid, TORUS)
    cyl = make_background("cylindrical", grid, TORUS)
    assert asymptotic_spec(make_perturbed_family(hyp, "ghat", "0"), hyp).kind == F_TYPE
    assert asymptotic_spec(make_perturbed_family(cyl, "ghat", "0"), cyl).kind == BAR_TYPE
    with pytest.raises(ProvenanceError):
        asymptotic_spec(eval_metric_family("exp(2*r), 0; 0, exp(2*r)", grid, TORUS), hyp)


def test_zero_perturbation_gives_zero():
    grid = build_radial_grid(0, 2, 41)
    hyp = make_background("hyperbolic", grid, TORUS)
    assert estimator_infinity(make_perturbed_family(hyp, "ghat", "0"), hyp).value == 0
    cyl = make_background("cylindrical", grid, TORUS)
    assert estimator_base(make_perturbed_family(cyl, "ghat", "0"), cyl, "b").value == 0


def test_cone_estimator_and_literal_sign():
    grid = build_radial_grid(0.5, 200, 801)
    bg = make_background("euclidean", grid, SPHERE)
    fam = make_perturbed_family(bg, "ghat", "1/r")
    assert estimator_infinity(fam, bg).value == pytest.approx(4 * math.pi, abs=1e-3)
    assert estimator_infinity(fam, bg, literal=True).value == pytest.approx(-4 * math.pi, abs=1e-3)


def test_hyperbolic_estimator_matches_direct_mass():
    grid = build_radial_grid(0, 10, 2001)
    bg = make_background("hyperbolic", grid, TORUS, k=0)
    alpha, beta = 0.3, 0.7
    fam = make_perturbed_family(bg, f"{alpha}, 0; 0, {beta}", "0.5*exp(-2*r)")
    est = estimator_infinity(fam, bg).value
    assert est == pytest.approx(0.5 * (alpha + beta) * 4 * math.pi**2, rel=1e-10)
    assert radial_mass(shape_bundle(fam), bg).M[-1] == pytest.approx(est, abs=1e-3)


def test_wrong_estimator_for_endpoint():
    grid = build_radial_grid(0, 2, 41)
    hyp = make_background("hyperbolic", grid, TORUS)
    with pytest.raises(DivergenceError):
        estimator_base(make_perturbed_family(hyp, "ghat", "0.1"), hyp, "b")
    cyl = make_background("cylindrical", grid, TORUS)
    with pytest.raises(DivergenceError):
        estimator_infinity(make_perturbed_family(cyl, "ghat", "0.1"), cyl)


def test_cylindrical_base_estimator():
    grid = build_radial_grid(0, 10, 2001)
    bg = make_background("cylindrical", grid, TORUS)
    fam = make_perturbed_family(bg, "ghat", "exp(-r)")
    est = estimator_base(fam, bg, "b")
    assert est.value == pytest.approx(math.exp(-10) * 4 * math.pi**2, rel=1e-5)
    assert radial_mass(shape_bundle(fam), bg).M[-1] == pytest.approx(est.value, abs=1e-3)
    assert est.limit_converged and abs(est.limit) < 1e-6
    assert est.flags["Gbar_o1"] and est.flags["hbhb'Gbar_o1"] and est.flags["hb2Gbar'_O1"]


def test_spherical_base_estimator_near_pole():
    grid = build_radial_grid(0, 1, 401, inset=1e-3)
    bg = make_background("spherical", grid, SPHERE)
    fam = make_perturbed_family(bg, "ghat", "2*r^2")
    est = estimator_base(fam, bg, "a")
    assert abs(est.value) < 1e-6
    assert abs(radial_mass(shape_bundle(fam), bg).M[0]) < 1e-4


def test_extrapolate_constant_and_cone():
    r = np.linspace(1, 10, 50)
    ext = extrapolate_limit(r, np.full_like(r, 3.25), math.inf)
    assert ext.converged and ext.value == pytest.approx(3.25, abs=1e-12) and ext.residual < 1e-12
    r = np.linspace(0.5, 200, 801)
    ext = extrapolate_limit(r, 4 * math.pi * r / (r + 1), math.inf)
    assert ext.converged and ext.rate == "1/r"
    assert ext.value == pytest.approx(4 * math.pi, abs=1e-3)


def test_extrapolate_finite_endpoint():
    r = np.linspace(0.01, 1, 200)
    ext = extrapolate_limit(r, 2 + 3 * r**2, 0.0)
    assert ext.converged and ext.value == pytest.approx(2, abs=1e-9)


def test_extrapolate_flags_schwarzschild_drift():
    grid = build_radial_grid(0.5, 100, 2001)
    fam = eval_metric_family("schwarzschild(1)", grid, SPHERE)
    M = radial_mass(shape_bundle(fam), make_background("euclidean", grid, SPHERE)).M
    ext = extrapolate_limit(grid.r, M, math.inf)
    assert not ext.converged
    assert ext.value == M[-1]


def test_extrapolate_needs_samples():
    with pytest.raises(ValueError):
        extrapolate_limit(np.arange(5.0), np.zeros(5), math.inf)


@pytest.mark.parametrize(
    "preset, P, B, window",
    [
        ("euclidean", "ghat", "2/r", (1, 300)),
        ("hyperbolic", "1, 0.2; 0.2, -0.5", "0.5*exp(-2*r)", (0, 6)),
        ("hyperbolic", "1 + 0.5*sin(x1), 0; 0, 1 - 0.3*cos(x2)", "0.5*exp(-2*r)", (0, 6)),
    ],
)
def test_estimator_agrees_with_extrapolated_direct_mass(preset, P, B, window):
    chart = SPHERE if preset == "euclidean" else TORUS
    grid = build_radial_grid(*window, 4801 if preset == "hyperbolic" else 1201)
    bg = make_background(preset, grid, chart)
    fam = make_perturbed_family(bg, P, B)
    M = radial_mass(shape_bundle(fam), bg).M
    ext = extrapolate_limit(grid.r, M, math.inf)
    assert ext.converged
    assert abs(estimator_infinity(fam, bg).value - ext.value) <= 1e-3


def test_profile_limit_beyond_the_truncated_end():
    grid = build_radial_grid(0, 6, 1201)
    bg = make_background("hyperbolic", grid, TORUS)
    est = estimator_infinity(make_perturbed_family(bg, "ghat", "exp(-2*r)*(1 + exp(-r))"), bg)
    assert est.value == pytest.approx((2 + 3 * math.exp(-6)) * 4 * math.pi**2, rel=1e-6)
    assert est.limit_converged
    assert est.limit == pytest.approx(2 * 4 * math.pi**2, abs=1e-6)
