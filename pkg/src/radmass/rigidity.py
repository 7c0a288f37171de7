"""Integrated Riccati identity, equality detection and the model corollaries.

Integrating ``m' = hb^2 (R_rr - Rb_rr) + m^2/((n-1) hb^2) + hb^2 |s|^2`` over
the truncated cylinder gives ``lhs = rhs + defect`` with

    lhs    = M(r_last) - M(r_first)
    rhs    = int hb^2 (R_rr - Rb_rr) dr dmu_Ghat
    defect = int [m^2/((n-1) hb^2) + hb^2 |s|^2] dr dmu_Ghat >= 0.

On a grid the identity holds up to O(dr^2); ``identity_gap`` reports it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chart import AngularChart, RadialGrid, ddr, integrate_N
from .curvature import (
    CurvatureBundle,
    background_oracle_rrr,
    background_radial_ricci,
    radial_ricci,
    ricci_oracle,
    shape_bundle,
)
from .mass import MassField, gauss_curvature, mass_2d, radial_integral, radial_mass
from .metric import BackgroundWarped, MetricError, MetricFamily, expand_radial, make_background, natural_interval

RRR_SOURCES = ("radial", "oracle")
MODEL_RRR0 = {"hyperbolic": -1, "euclidean": 0, "cylindrical": 0, "spherical": 1}


@dataclass
class TheoremReport:
    lhs: float
    rhs: float
    defect: float
    identity_gap: float
    tol: float
    inequality_holds: bool
    is_warped_product: bool
    equals_background: bool
    asymptotic_at: str | None = None
    rrr_source: str = "radial"
    extras: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        return {
            "inequality_holds": self.inequality_holds,
            "is_warped_product": self.is_warped_product,
            "equals_background": self.equals_background,
            "asymptotic_at": self.asymptotic_at,
        }


def equality_tol(grid: RadialGrid, m: np.ndarray, s2: np.ndarray) -> float:
    """max(1e-8, 10 dr^2 (sup|m| + sup|s|^2))."""
    scale = float(np.max(np.abs(m)) + np.max(np.abs(s2)))
    return max(1e-8, 10 * grid.dr**2 * scale)


def curvature_pair(fam: MetricFamily, bg: BackgroundWarped, source: str = "radial", bundle=None):
    """(R_rr, Rb_rr) computed by the same route for g and g0."""
    if source == "radial":
        bundle = bundle or shape_bundle(fam)
        return radial_ricci(bundle), background_radial_ricci(bg)
    if source == "oracle":
        return ricci_oracle(fam).rrr, background_oracle_rrr(bg)
    raise ValueError(f"rrr source must be one of {RRR_SOURCES}, got {source!r}")


@dataclass(frozen=True)
class WarpedCheck:
    is_warped: bool
    deviation: float
    equals_background: bool
    background_deviation: float


def _ghat_norm(T: np.ndarray, ghat: np.ndarray) -> np.ndarray:
    """Pointwise ||T||_Ghat = sqrt(tr(Ghat^-1 T Ghat^-1 T))."""
    A = np.linalg.solve(ghat, T)
    return np.sqrt(np.abs(np.einsum("...ab,...ba->...", A, A)))


def warped_product_detector(fam: MetricFamily, bg: BackgroundWarped, tol: float) -> WarpedCheck:
    """True iff sup ||d/dr (hb^-2 G)||_Ghat <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    inv = expand_radial(bg.h**-2, bg.chart)[..., None, None]
    Gt = inv * fam.G
    ghat = np.broadcast_to(bg.chart.ghat, fam.G.shape)
    deviation = float(np.max(_ghat_norm(ddr(Gt, fam.grid), ghat)))
    bdev = float(np.max(_ghat_norm(Gt - ghat, ghat)))
    warped = deviation <= tol
    return WarpedCheck(warped, deviation, warped and bdev <= tol, bdev)


def _asymptotic_endpoint(fam: MetricFamily, bg: BackgroundWarped, tol: float) -> str | None:
    """Endpoint sample where ||G - Gb||_Gb <= tol, if any."""
    Gb = bg.Gb
    dev = _ghat_norm(fam.G - Gb, Gb)
    axes = tuple(range(1, dev.ndim))
    ends = dev.max(axis=axes) if axes else dev
    if ends[0] <= tol:
        return "a"
    if ends[-1] <= tol:
        return "b"
    return None


def theorem_report(
    fam: MetricFamily,
    bg: BackgroundWarped,
    rrr_source: str = "radial",
    *,
    asymptotic_tol: float | None = None,
) -> TheoremReport:
    bundle = shape_bundle(fam)
    mass = radial_mass(bundle, bg)
    rrr, rrr0 = curvature_pair(fam, bg, rrr_source, bundle)
    chart, grid = bg.chart, bg.grid
    d = chart.dim
    hb2 = expand_radial(bg.h**2, chart)
    lhs = float(mass.M[-1] - mass.M[0])
    rhs = radial_integral(hb2 * (rrr - rrr0), grid, chart)
    defect = radial_integral(mass.m**2 / (d * hb2) + hb2 * bundle.s2, grid, chart)
    tol = equality_tol(grid, mass.m, bundle.s2)
    check = warped_product_detector(fam, bg, tol)
    scale = max(abs(lhs), abs(rhs), 1.0)
    gap = lhs - rhs - defect
    return TheoremReport(
        lhs=lhs,
        rhs=rhs,
        defect=defect,
        identity_gap=gap,
        tol=tol,
        inequality_holds=lhs >= rhs - max(tol * scale, abs(gap)),
        is_warped_product=defect <= tol and check.is_warped,
        equals_background=defect <= tol and check.equals_background,
        asymptotic_at=_asymptotic_endpoint(fam, bg, asymptotic_tol if asymptotic_tol else tol),
        rrr_source=rrr_source,
        extras={"mass": mass, "bundle": bundle, "warped": check},
    )


def theorem_report_2d(h, h0, grid: RadialGrid, chart: AngularChart) -> TheoremReport:
    """2D version: g = dr^2 + h^2 dtheta^2 against g0 = dr^2 + h0^2 dtheta^2, h0 = h0(r, theta)."""
    h = np.asarray(h, dtype=float)
    h0 = np.broadcast_to(np.asarray(h0, dtype=float), h.shape)
    m = mass_2d(h, h0, grid)
    M = integrate_N(m, chart)
    K, K0 = gauss_curvature(h, grid), gauss_curvature(h0, grid)
    lhs = float(M[-1] - M[0])
    rhs = radial_integral(h0**2 * (K - K0), grid, chart)
    defect = radial_integral((m / h0) ** 2, grid, chart)
    tol = equality_tol(grid, m, np.zeros(1))
    ratio = h / h0
    deviation = float(np.max(np.abs(ddr(ratio, grid))))
    gap = lhs - rhs - defect
    scale = max(abs(lhs), abs(rhs), 1.0)
    ends = np.max(np.abs(ratio - 1), axis=tuple(range(1, ratio.ndim)))
    asym = "a" if ends[0] <= tol else "b" if ends[-1] <= tol else None
    return TheoremReport(
        lhs=lhs,
        rhs=rhs,
        defect=defect,
        identity_gap=gap,
        tol=tol,
        inequality_holds=lhs >= rhs - max(tol * scale, abs(gap)),
        is_warped_product=defect <= tol and deviation <= tol,
        equals_background=defect <= tol and float(np.max(np.abs(ratio - 1))) <= tol,
        asymptotic_at=asym,
        extras={"m": m, "M": M},
    )


@dataclass
class ModelReport:
    model: str
    rrr0_constant: float
    rrr0_max_error: float
    report: TheoremReport
    background: BackgroundWarped


def model_preset_suite(model: str, fam: MetricFamily, rrr_source: str = "radial", **params) -> ModelReport:
    """Theorem report against one of the four model backgrounds.

    ``model`` is ``hyperbolic`` (with ``k``), ``euclidean``, ``cylindrical`` or
    ``spherical``; the family's grid must lie inside the model's natural
    interval.
    """
    name = model.split("(")[0].strip()
    if name not in MODEL_RRR0:
        raise MetricError(f"unknown model {model!r}; expected one of {sorted(MODEL_RRR0)}")
    lo, hi = natural_interval(name, float(params.get("k", 0.0)))
    if not (lo < fam.grid.start and fam.grid.stop < hi):
        raise MetricError(
            f"grid [{fam.grid.start:g}, {fam.grid.stop:g}] is not inside the {name} interval ({lo:g}, {hi:g})"
        )
    bg = make_background(model, fam.grid, fam.chart, **params)
    const = MODEL_RRR0[name] * (fam.n - 1)
    err = float(np.max(np.abs(bg.Rrr - const)))
    report = theorem_report(fam, bg, rrr_source)
    return ModelReport(name, float(const), err, report, bg)


@dataclass(frozen=True)
class MinimalBoundary:
    expected: float
    computed: float
    applicable: bool
    agrees: bool
    max_abs_H: float


def minimal_boundary_mass(bundle: CurvatureBundle, bg: BackgroundWarped, at: str = "a", tol: float | None = None) -> MinimalBoundary:
    """If N(at) is minimal, M(at) = (n-1) hb hb' mu(N)."""
    idx = 0 if at == "a" else -1 if at == "b" else None
    if idx is None:
        raise ValueError("endpoint must be 'a' or 'b'")
    grid = bg.grid
    if tol is None:
        tol = max(1e-8, 10 * grid.dr**2)
    H_end = float(np.max(np.abs(bundle.H[idx])))
    expected = (bg.n - 1) * bg.h[idx] * bg.dh[idx] * bg.chart.volume
    computed = float(radial_mass(bundle, bg).M[idx])
    applicable = H_end <= tol
    # M(at) - expected = -hb^2 int H dmu, bounded by hb^2 sup|H| mu(N)
    bound = bg.h[idx] ** 2 * tol * bg.chart.volume
    agrees = applicable and abs(expected - computed) <= bound + 1e-12 * max(1.0, abs(expected))
    return MinimalBoundary(float(expected), computed, applicable, bool(agrees), H_end)


@dataclass(frozen=True)
class MonotonicityResult:
    monotone: bool
    checked: int
    skipped: int
    first_violation: tuple | None
    worst_step: float


def monotonicity_check(m, rrr, rrr0, grid: RadialGrid, tol: float = 1e-8) -> MonotonicityResult:
    """Where R_rr >= Rb_rr along a whole radial fibre, r -> m(r, x) must not decrease.

    Checks consecutive samples m(r_{i+1}, x) - m(r_i, x) >= -tol; fibres
    failing the curvature precondition are skipped and counted.
    """
    m = np.asarray(m, dtype=float)
    gate = np.all(np.asarray(rrr) - np.asarray(rrr0) >= -tol, axis=0)
    steps = np.diff(m, axis=0)
    worst = np.min(steps, axis=0)
    violated = gate & (worst < -tol)
    first = None
    if violated.any():
        node = tuple(int(i) for i in np.argwhere(violated)[0])
        step = int(np.argmax(steps[(slice(None),) + node] < -tol))
        first = (float(grid.r[step]), node)
    checked = int(gate.sum())
    worst_checked = float(worst[gate].min()) if checked else math.nan
    return MonotonicityResult(not violated.any(), checked, int(gate.size - checked), first, worst_checked)


def monotonicity_from_family(fam: MetricFamily, bg: BackgroundWarped, tol: float = 1e-8) -> MonotonicityResult:
    bundle = shape_bundle(fam)
    mass = radial_mass(bundle, bg)
    rrr, rrr0 = curvature_pair(fam, bg, "radial", bundle)
    return monotonicity_check(mass.m, rrr, rrr0, fam.grid, tol)


__all__ = [
    "MassField",
    "MinimalBoundary",
    "ModelReport",
    "MonotonicityResult",
    "TheoremReport",
    "WarpedCheck",
    "curvature_pair",
    "equality_tol",
    "minimal_boundary_mass",
    "model_preset_suite",
    "monotonicity_check",
    "monotonicity_from_family",
    "theorem_report",
    "theorem_report_2d",
    "warped_product_detector",
]
