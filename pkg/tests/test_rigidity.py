import math

import numpy as np
import pytest
from scipy import integrate

from radmass.chart import build_chart, build_radial_grid
from radmass.corpus import CORPUS
from radmass.curvature import shape_bundle
from radmass.metric import (
    MetricError,
    background_family,
    eval_metric_family,
    make_background,
    make_perturbed_family,
)
from radmass.rigidity import (
    equality_tol,
    minimal_boundary_mass,
    model_preset_suite,
    monotonicity_check,
    monotonicity_from_family,
    theorem_report,
    theorem_report_2d,
    warped_product_detector,
)

TORUS = build_chart("periodic-box", 2, 8)
SPHERE = build_chart("latlong-sphere", 2, (16, 32), "round")
CIRCLE = build_chart("periodic-box", 1, 8)


def test_background_report_is_trivial():
    grid = build_radial_grid(0, 1, 201)
    bg = make_background("hyperbolic", grid, TORUS, k=0)
    rep = theorem_report(background_family(bg), bg)
    assert max(abs(rep.lhs), abs(rep.rhs), abs(rep.defect)) <= 1e-8
    assert rep.inequality_holds and rep.is_warped_product and rep.equals_background
    assert rep.asymptotic_at in ("a", "b")


def test_warped_product_without_being_background():
    grid = build_radial_grid(0, 1, 201)
    bg = make_background("hyperbolic", grid, TORUS, k=0)
    rep = theorem_report(make_perturbed_family(bg, "ghat", "1"), bg)
    assert rep.defect <= 1e-8
    assert rep.is_warped_product and not rep.equals_background
    assert rep.asymptotic_at is None


def test_oracle_source_gives_same_verdicts():
    grid = build_radial_grid(0, 1, 201)
    bg = make_background("hyperbolic", grid, TORUS, k=1)
    fam = make_perturbed_family(bg, "1, 0; 0, -1", "0.1*exp(-2*r)")
    radial, oracle = theorem_report(fam, bg), theorem_report(fam, bg, "oracle")
    assert radial.rhs == pytest.approx(oracle.rhs, abs=1e-3)
    assert oracle.inequality_holds and not oracle.is_warped_product
    with pytest.raises(ValueError):
        theorem_report(fam, bg, "guess")


def test_two_dimensional_defect_matches_quadrature():
    gaps = []
    for nr in (201, 401):
        grid = build_radial_grid(0, 1, nr)
        h0 = np.broadcast_to(np.exp(grid.r)[:, None], (nr, 8))
        h = h0 * (1 + 0.1 * np.exp(-2 * grid.r))[:, None]
        rep = theorem_report_2d(h, h0, grid, CIRCLE)
        gaps.append(abs(rep.lhs - rep.rhs - rep.defect))
    exact = 2 * math.pi * integrate.quad(lambda r: (0.2 * math.exp(-r) / (1 + 0.1 * math.exp(-2 * r))) ** 2, 0, 1)[0]
    assert rep.defect == pytest.approx(exact, rel=1e-5)
    assert rep.defect > 0 and not rep.is_warped_product
    assert gaps[1] <= 10 * grid.dr**2
    assert gaps[0] / gaps[1] > 3.5


def test_detector_examples():
    grid = build_radial_grid(0, 1, 101)
    bg = make_background("hyperbolic", grid, TORUS)
    fixed = make_perturbed_family(bg, "0.5, 0.1; 0.1, 0.2", "1")
    check = warped_product_detector(fixed, bg, 1e-8)
    assert check.is_warped and check.deviation <= 1e-10 and not check.equals_background
    moving = make_perturbed_family(bg, "ghat", "0.1*exp(-2*r)")
    check = warped_product_detector(moving, bg, 1e-8)
    assert not check.is_warped and check.deviation > 0
    same = warped_product_detector(background_family(bg), bg, 1e-8)
    assert same.is_warped and same.equals_background
    with pytest.raises(ValueError):
        warped_product_detector(fixed, bg, 0.0)


def test_equality_tolerance_floor():
    grid = build_radial_grid(0, 1, 11)
    assert equality_tol(grid, np.zeros(3), np.zeros(3)) == 1e-8
    assert equality_tol(grid, np.full(3, 100.0), np.zeros(3)) == pytest.approx(10 * 0.01 * 100)


def test_cylindrical_product_is_rigid():
    grid = build_radial_grid(-1, 1, 201)
    fam = eval_metric_family("2, 0.5; 0.5, 1", grid, TORUS)
    rep = model_preset_suite("cylindrical", fam)
    assert rep.rrr0_constant == 0
    assert rep.report.is_warped_product and rep.report.defect <= 1e-8


def test_euclidean_model_on_the_cone():
    grid = build_radial_grid(0.5, 50, 2001)
    fam = eval_metric_family("cone(1)", grid, SPHERE)
    rep = model_preset_suite("euclidean", fam)
    assert rep.rrr0_max_error < 1e-6
    assert rep.report.inequality_holds
    assert rep.report.rhs > 0


def test_spherical_model_warped_equality():
    grid = build_radial_grid(0.05, math.pi - 0.05, 401)
    bg = make_background("spherical", grid, SPHERE)
    rep = model_preset_suite("spherical", make_perturbed_family(bg, "ghat", "1"))
    assert rep.rrr0_constant == 2
    assert rep.report.is_warped_product and not rep.report.equals_background


def test_model_interval_checked():
    fam = eval_metric_family("1, 0; 0, 1", build_radial_grid(-1, 1, 21), TORUS)
    with pytest.raises(MetricError):
        model_preset_suite("euclidean", fam)
    with pytest.raises(MetricError):
        model_preset_suite("spherical", eval_metric_family("1, 0; 0, 1", build_radial_grid(1, 4, 21), TORUS))
    with pytest.raises(MetricError):
        model_preset_suite("lorentzian", fam)


def test_minimal_boundary_symmetric_neck():
    grid = build_radial_grid(0, 1, 401)
    bg = make_background("hyperbolic", grid, TORUS, k=1)
    fam = eval_metric_family("cosh(r)^2, 0; 0, cosh(r)^2", grid, TORUS)
    res = minimal_boundary_mass(shape_bundle(fam), bg, "a")
    assert res.applicable and res.agrees
    assert res.expected == pytest.approx(0, abs=1e-4)


def test_minimal_boundary_shifted_neck():
    grid = build_radial_grid(0.5, 1.5, 401)
    bg = make_background("hyperbolic", grid, TORUS, k=1)
    fam = eval_metric_family("cosh(r - 0.5)^2, 0; 0, cosh(r - 0.5)^2", grid, TORUS)
    res = minimal_boundary_mass(shape_bundle(fam), bg, "a")
    hb = math.exp(0.5) + math.exp(-0.5)
    dhb = math.exp(0.5) - math.exp(-0.5)
    assert res.applicable and res.agrees
    assert res.expected == pytest.approx(2 * hb * dhb * 4 * math.pi**2, rel=1e-5)


def test_minimal_boundary_not_applicable():
    grid = build_radial_grid(0, 1, 101)
    bg = make_background("hyperbolic", grid, TORUS)
    res = minimal_boundary_mass(shape_bundle(background_family(bg)), bg, "a")
    assert not res.applicable and not res.agrees
    with pytest.raises(ValueError):
        minimal_boundary_mass(shape_bundle(background_family(bg)), bg, "c")


def test_monotonicity_examples():
    grid = build_radial_grid(0.1, 3.0, 1001)
    bg = make_background("hyperbolic", grid, TORUS)
    assert monotonicity_from_family(background_family(bg), bg).monotone

    h = np.broadcast_to(np.sin(grid.r)[:, None], (grid.nr, 8))
    from radmass.mass import gauss_curvature, mass_2d

    h0 = np.broadcast_to(grid.r[:, None], h.shape)
    res = monotonicity_check(mass_2d(h, h0, grid), gauss_curvature(h, grid), gauss_curvature(h0, grid), grid)
    assert res.monotone and res.skipped == 0 and res.checked == 8


def test_monotonicity_gate_and_violation():
    grid = build_radial_grid(0, 1, 11)
    m = np.tile(-grid.r[:, None], (1, 4))
    rrr = np.zeros((11, 4))
    rrr[5, 0] = -1.0  # fibre 0 fails the curvature precondition
    res = monotonicity_check(m, rrr, np.zeros_like(rrr), grid)
    assert res.skipped == 1 and res.checked == 3
    assert not res.monotone
    assert res.first_violation == (0.0, (1,))


@pytest.mark.parametrize("case", CORPUS, ids=lambda c: c.name)
def test_comparison_directions(case):
    fam, bg = case.build(1)
    rep = theorem_report(fam, bg)
    slack = abs(rep.identity_gap) + rep.tol
    if rep.rhs >= 0:
        assert rep.lhs >= -slack
    if rep.lhs <= 0:
        assert rep.rhs <= slack
    if rep.defect <= rep.tol:
        assert warped_product_detector(fam, bg, max(rep.tol, 1e-6)).is_warped
