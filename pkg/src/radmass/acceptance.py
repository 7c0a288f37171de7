"""The acceptance checks, one function per criterion.

Each returns a :class:`CriterionResult`; :func:`run_all` runs them in order.
Used by ``tests/test_acceptance.py`` and by the ``selftest`` subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import estimator_infinity, extrapolate_limit
from .chart import build_chart, build_radial_grid, integrate_N
from .compare import ch_flux, hawking_mass
from .corpus import CORPUS, riccati_family
from .curvature import (
    background_oracle_rrr,
    radial_ricci,
    ricci_oracle,
    riccati_matrix,
    shape_bundle,
)
from .mass import (
    EDGE_TRIM,
    ZERO_FLOOR,
    gauss_curvature,
    mass_2d,
    radial_mass,
    residual_report,
    riccati_residual_2d,
    riccati_residual_nd,
    second_order,
)
from .metric import (
    background_family,
    eval_metric_family,
    h_field,
    make_background,
    make_perturbed_family,
)
from .rigidity import model_preset_suite, monotonicity_check, theorem_report


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.title}: {self.detail}"


def _result(number, title, passed, detail):
    return CriterionResult(number, title, bool(passed), detail)


def _ratio_text(coarse, fine):
    if max(coarse.sup, fine.sup) <= ZERO_FLOOR:
        return "both below floor"
    return f"ratio {coarse.sup / fine.sup:.3f}"


def criterion_1() -> CriterionResult:
    reports = []
    for refine in (1, 2):
        fam, bg = riccati_family(refine)
        bundle = shape_bundle(fam)
        rrr = ricci_oracle(fam).rrr
        reports.append(riccati_residual_nd(radial_mass(bundle, bg), bundle, bg, rrr, background_oracle_rrr(bg)))
    coarse, fine = reports
    ok = coarse.sup <= 1e-3 and second_order(coarse, fine)
    return _result(1, "Riccati identity, oracle R_rr, n=3 torus", ok,
                   f"sup {coarse.sup:.3e} -> {fine.sup:.3e}, {_ratio_text(coarse, fine)}")


def riccati_2d_fields(refine: int = 1):
    grid = build_radial_grid(0, 1, 400 * refine + 1)
    chart = build_chart("periodic-box", 1, 16 * refine)
    h0 = h_field("exp(r)*(1 + 0.2*sin(x1)^2)", grid, chart)
    h = h0 * np.exp(-grid.r)[:, None] * 0.05 + h0
    return h, h0, grid, chart


def criterion_2() -> CriterionResult:
    coarse, fine = (riccati_residual_2d(*riccati_2d_fields(refine)) for refine in (1, 2))
    ok = coarse.sup <= 1e-3 and second_order(coarse, fine)
    return _result(2, "2D Riccati identity, angle-dependent background", ok,
                   f"sup {coarse.sup:.3e} -> {fine.sup:.3e}, {_ratio_text(coarse, fine)}")


def criterion_3() -> CriterionResult:
    worst, bad = 0.0, []
    for case in CORPUS:
        reports = []
        for refine in (1, 2):
            fam, bg = case.build(refine)
            mf = radial_mass(shape_bundle(fam), bg)
            reports.append(residual_report(mf.m - mf.m_det, fam.grid, fam.chart, trim=0))
        coarse, fine = reports
        worst = max(worst, coarse.sup)
        if coarse.sup > 1e-4 or not second_order(coarse, fine):
            bad.append(f"{case.name} ({coarse.sup:.2e}, {_ratio_text(coarse, fine)})")
    detail = f"worst sup|m - m_det| {worst:.3e} over {len(CORPUS)} families"
    return _result(3, "mass-form equivalence", not bad, detail + ("; failing: " + ", ".join(bad) if bad else ""))


def oracle_families(refine: int = 1):
    grid = build_radial_grid(0, 1, 400 * refine + 1)
    chart = build_chart("periodic-box", 2, 8 * refine)
    flat = background_family(make_background("cylindrical", grid, chart))
    warp = background_family(make_background("hyperbolic", grid, chart, k=0))
    aniso = eval_metric_family("exp(2*r), 0; 0, exp(4*r)", grid, chart)
    return {"flat product": flat, "exp(2r) warp": warp, "diag(exp(2r), exp(4r))": aniso}


def criterion_4() -> CriterionResult:
    diffs = {}
    for refine in (1, 2):
        for name, fam in oracle_families(refine).items():
            bundle = shape_bundle(fam)
            oracle = ricci_oracle(fam)
            rr = residual_report(oracle.rrr - radial_ricci(bundle), fam.grid, fam.chart)
            mixed = oracle.mixed - riccati_matrix(bundle)
            mx = residual_report(np.max(np.abs(mixed), axis=(-2, -1)), fam.grid, fam.chart)
            diffs.setdefault(name, []).append((rr, mx))
    bad, parts = [], []
    for name, ((rr0, mx0), (rr1, mx1)) in diffs.items():
        ok = max(rr0.sup, mx0.sup) <= 1e-3 and second_order(rr0, rr1) and second_order(mx0, mx1)
        parts.append(f"{name}: {max(rr0.sup, mx0.sup):.2e} ({_ratio_text(rr0, rr1)})")
        if not ok:
            bad.append(name)
    return _result(4, "oracle vs shape-operator curvature", not bad, "; ".join(parts))


def criterion_5() -> CriterionResult:
    bad, worst = [], 0.0
    for case in CORPUS:
        fam, bg = case.build(1)
        rep = theorem_report(fam, bg)
        worst = max(worst, abs(rep.identity_gap))
        ok = abs(rep.identity_gap) <= 1e-4
        ok &= rep.defect <= 1e-8 if case.warped else rep.defect > 1e-3
        if not ok:
            bad.append(f"{case.name} (gap {rep.identity_gap:.2e}, defect {rep.defect:.2e})")
    detail = f"worst |lhs - rhs - defect| {worst:.3e}"
    return _result(5, "integrated identity and equality defect", not bad,
                   detail + ("; failing: " + ", ".join(bad) if bad else ""))


def criterion_6() -> CriterionResult:
    grid = build_radial_grid(math.pi / 2 - 0.5, math.pi / 2 + 0.5, 2001)
    circle = build_chart("periodic-box", 1, 8)
    shape = (grid.nr,) + circle.shape
    h = np.broadcast_to(np.sin(grid.r)[:, None], shape)
    h0 = np.broadcast_to(grid.r[:, None], shape)
    m2 = mass_2d(h, h0, grid)
    mid = grid.index_of(math.pi / 2)
    m_mid, M_mid = float(m2[mid, 0]), float(integrate_N(m2, circle)[mid])

    cgrid = build_radial_grid(0.5, 1.5, 401)
    sphere = build_chart("latlong-sphere", 2, (16, 32), "round")
    bg = make_background("euclidean", cgrid, sphere)
    cone = radial_mass(shape_bundle(eval_metric_family("cone(1)", cgrid, sphere)), bg)
    one = cgrid.index_of(1.0)
    m1, M1 = float(np.max(np.abs(cone.m[one] - 0.5))), float(cone.M[one])
    errs = [abs(m_mid - math.pi / 2), m1, abs(M1 - 2 * math.pi), abs(M_mid - math.pi**2)]
    ok = errs[0] <= 1e-6 and errs[1] <= 1e-6 and errs[2] <= 1e-4 and errs[3] <= 1e-6
    return _result(6, "closed-form spot values", ok,
                   "errors m(pi/2) {:.1e}, cone m(1) {:.1e}, cone M(1) {:.1e}, M(pi/2) {:.1e}".format(*errs))


MODEL_WINDOWS = {
    "hyperbolic(-1)": (0.5, 1.3),
    "hyperbolic(0)": (0.0, 0.8),
    "hyperbolic(1)": (-0.4, 0.4),
    "euclidean": (0.5, 1.3),
    "cylindrical": (0.0, 0.8),
    "spherical": (0.5, 1.3),
}


def criterion_7() -> CriterionResult:
    chart = build_chart("periodic-box", 2, 8)
    worst, parts = 0.0, []
    for model, (a, b) in MODEL_WINDOWS.items():
        grid = build_radial_grid(a, b, 401)
        fam = background_family(make_background(model, grid, chart))
        rep = model_preset_suite(model, fam)
        worst = max(worst, rep.rrr0_max_error)
        parts.append(f"{model} {rep.rrr0_constant:+g} ({rep.rrr0_max_error:.1e})")
    return _result(7, "model background R_rr constants", worst <= 1e-6, ", ".join(parts))


def criterion_8() -> CriterionResult:
    grid = build_radial_grid(0.5, 200, 801)
    sphere = build_chart("latlong-sphere", 2, (16, 32), "round")
    bg = make_background("euclidean", grid, sphere)
    fam = make_perturbed_family(bg, "ghat", "1/r")
    est = estimator_infinity(fam, bg).value
    direct = radial_mass(shape_bundle(eval_metric_family("cone(1)", grid, sphere)), bg)
    ext = extrapolate_limit(grid.r, direct.M, math.inf)
    target = 4 * math.pi
    ok = abs(est - target) <= 1e-3 and ext.converged and abs(ext.value - est) <= 1e-3
    return _result(8, "boundary-mass estimator on the cone", ok,
                   f"estimator {est:.9f}, extrapolated {ext.value:.9f} (rate {ext.rate}), 4pi {target:.9f}")


def criterion_9() -> CriterionResult:
    sphere = build_chart("latlong-sphere", 2, (16, 32), "round")
    grid = build_radial_grid(0, 60, 2001)
    schw = float(np.max(np.abs(hawking_mass(eval_metric_family("schwarzschild(1)", grid, sphere)).m_H - 1)))
    fgrid = build_radial_grid(0.5, 100, 801)
    flat = float(np.max(np.abs(hawking_mass(background_family(make_background("euclidean", fgrid, sphere))).m_H)))
    cgrid = build_radial_grid(0.5, 10.5, 401)
    cone_mh = hawking_mass(eval_metric_family("cone(1)", cgrid, sphere)).m_H[cgrid.index_of(1.0)]
    cone = abs(float(cone_mh) + math.sqrt(2) / 16)
    ok = schw <= 1e-4 and flat <= 1e-6 and cone <= 1e-4
    return _result(9, "Hawking mass", ok,
                   f"Schwarzschild max|m_H - 1| {schw:.1e}, flat max|m_H| {flat:.1e}, cone |m_H(1) + sqrt2/16| {cone:.1e}")


def criterion_10() -> CriterionResult:
    grid = build_radial_grid(2.5, 8.5, 6001)
    circle = build_chart("periodic-box", 1, 8)
    bg = make_background("hyperbolic", grid, circle, k=0)
    alpha = 0.5
    delta = np.broadcast_to((alpha * np.exp(-grid.r))[:, None], (grid.nr,) + circle.shape)
    flux = ch_flux(None, bg, delta=delta)
    at6 = abs(float(flux.ratio[grid.index_of(6.0)]) - 3)
    rs = np.arange(3.0, 8.5, 0.5)
    idx = [grid.index_of(x) for x in rs]
    gap = np.abs(flux.p[idx] - 3 * flux.M[idx])
    slope = float(np.polyfit(rs, np.log(gap), 1)[0])
    ok = at6 <= 1e-3 and abs(slope + 2) <= 0.1
    return _result(10, "flux factor 3", ok, f"|p/M - 3| at r=6 {at6:.2e}, decay slope of |p - 3M| {slope:.4f}")


def criterion_11() -> CriterionResult:
    lam = 2.0
    parts, ok = [], True
    cases = [
        ("n=2", build_chart("periodic-box", 1, 8)),
        ("n=3", build_chart("periodic-box", 2, 8)),
        ("n=4", build_chart("periodic-box", 3, 8)),
    ]
    grid = build_radial_grid(0, 1, 401)
    for label, chart in cases:
        bg = make_background("hyperbolic", grid, chart, k=0)
        d = chart.dim
        P = "; ".join(", ".join("0.3" if i == j else "0" for j in range(d)) for i in range(d))
        fam = make_perturbed_family(bg, P, "exp(-2*r)*(1 + 0.2*cos(x1))")
        bundle = shape_bundle(fam)
        M = radial_mass(bundle, bg).M
        Ms = radial_mass(bundle, bg.scaled(lam)).M
        factor = lam ** (3 - bg.n)
        err = float(np.max(np.abs(Ms - factor * M)))
        ok &= err <= 1e-10
        parts.append(f"{label} x{factor:g} err {err:.1e}")
    return _result(11, "scaling of the background", ok, ", ".join(parts))


def criterion_12() -> CriterionResult:
    grid = build_radial_grid(0.1, 3.0, 1001)
    circle = build_chart("periodic-box", 1, 8)
    shape = (grid.nr,) + circle.shape
    h = np.broadcast_to(np.sin(grid.r)[:, None], shape)
    h0 = np.broadcast_to(grid.r[:, None], shape)
    res = monotonicity_check(mass_2d(h, h0, grid), gauss_curvature(h, grid), gauss_curvature(h0, grid), grid, 1e-8)
    ok = res.monotone and res.skipped == 0
    return _result(12, "monotonicity, sphere vs flat", ok,
                   f"{res.checked} fibres checked, {res.skipped} skipped, smallest step {res.worst_step:.3e}")


CRITERIA = (
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
    criterion_12,
)


def run_all() -> list[CriterionResult]:
    return [check() for check in CRITERIA]


__all__ = ["CRITERIA", "EDGE_TRIM", "CriterionResult", "run_all"]
