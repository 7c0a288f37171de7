"""Relative radial mass and the residuals of its Riccati identities.

``m = hb^2 (Hb - H)`` per grid point and ``M(r) = int_N m dmu_Ghat``.  The
residual functions return the pointwise defect of each identity together
with its norms; derivatives of sampled quantities are always taken with
:func:`~radmass.chart.ddr` on the samples themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .chart import AngularChart, GridError, RadialGrid, ddr, integrate_N, trapezoid_r
from .curvature import CurvatureBundle, background_radial_ricci
from .metric import BackgroundWarped, MetricFamily, expand_radial

# Samples at each radial end excluded from residual norms.  Quantities that
# are derivatives of derivatives pick up an O(dr) error there from the
# one-sided closures, which would mask the O(dr^2) interior behaviour.
EDGE_TRIM = 2

SECOND_ORDER_BAND = (3.5, 4.5)
ZERO_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class MassField:
    m: np.ndarray
    m_det: np.ndarray
    M: np.ndarray
    provenance: str
    grid: RadialGrid
    chart: AngularChart


@dataclass(frozen=True, eq=False)
class ResidualReport:
    field: np.ndarray
    sup: float
    l1: float
    dr: float
    trim: int
    ratio: float | None = None

    def with_ratio(self, coarse: "ResidualReport") -> "ResidualReport":
        return replace(self, ratio=convergence_ratio(coarse, self))


def residual_report(values, grid: RadialGrid, chart: AngularChart, trim: int = EDGE_TRIM) -> ResidualReport:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("residual has non-finite entries")
    core = values[trim : values.shape[0] - trim] if trim else values
    sup = float(np.max(np.abs(core)))
    l1 = float(np.sum(integrate_N(np.abs(core), chart)) * grid.dr)
    return ResidualReport(values, sup, l1, grid.dr, trim)


def convergence_ratio(coarse: ResidualReport, fine: ResidualReport) -> float:
    if fine.sup == 0:
        return float("inf") if coarse.sup > 0 else float("nan")
    return coarse.sup / fine.sup


def second_order(coarse: ResidualReport, fine: ResidualReport, band=SECOND_ORDER_BAND, floor=ZERO_FLOOR) -> bool:
    """Refinement ratio within ``band``, or both errors below ``floor``."""
    if max(coarse.sup, fine.sup) <= floor:
        return True
    ratio = convergence_ratio(coarse, fine)
    return band[0] <= ratio <= band[1]


def _check_same_grid(*objs) -> None:
    grids = {(o.grid.a, o.grid.b, o.grid.nr, o.grid.inset) for o in objs}
    charts = {(o.chart.kind, o.chart.shape, o.chart.spacing) for o in objs}
    if len(grids) > 1 or len(charts) > 1:
        raise GridError("inputs live on different grids")


def radial_mass(bundle: CurvatureBundle, bg: BackgroundWarped) -> MassField:
    _check_same_grid(bundle, bg)
    hb2 = expand_radial(bg.h**2, bg.chart)
    m = hb2 * (expand_radial(bg.H, bg.chart) - bundle.H)
    m_det = radial_mass_det(bundle.family, bg)
    M = integrate_N(m, bg.chart)
    return MassField(m, m_det, np.atleast_1d(M), "2D" if bg.n == 2 else "nD", bg.grid, bg.chart)


def radial_mass_det(fam: MetricFamily, bg: BackgroundWarped) -> np.ndarray:
    """hb^2 d/dr log sqrt(det Gb / det G)."""
    _check_same_grid(fam, bg)
    det = fam.det
    if np.any(det <= 0):
        raise ValueError("det G must be positive")
    det_b = np.linalg.det(bg.Gb)
    half_log = 0.5 * np.log(det_b / det)
    return expand_radial(bg.h**2, bg.chart) * ddr(half_log, bg.grid)


def _route_rrr0(bg: BackgroundWarped, rrr0):
    return background_radial_ricci(bg) if rrr0 is None else np.asarray(rrr0, dtype=float)


def riccati_residual_nd(
    mass: MassField,
    bundle: CurvatureBundle,
    bg: BackgroundWarped,
    rrr,
    rrr0=None,
) -> ResidualReport:
    """m' - hb^2 (R_rr - Rb_rr) - m^2 / ((n-1) hb^2) - hb^2 |s|^2.

    ``rrr`` comes from :func:`radial_ricci` or :func:`ricci_oracle`.  ``rrr0``
    defaults to the background curvature computed by the radial route; pass
    the oracle's value for g0 when ``rrr`` comes from the oracle.
    """
    _check_same_grid(bundle, bg, mass)
    d = bg.chart.dim
    hb2 = expand_radial(bg.h**2, bg.chart)
    rrr0 = _route_rrr0(bg, rrr0)
    m = mass.m
    res = ddr(m, bg.grid) - hb2 * (rrr - rrr0) - m**2 / (d * hb2) - hb2 * bundle.s2
    return residual_report(res, bg.grid, bg.chart)


def mass_2d(h, h0, grid: RadialGrid) -> np.ndarray:
    """m = -h0^2 d/dr log(h/h0) for g = dr^2 + h^2 dtheta^2, g0 = dr^2 + h0^2 dtheta^2."""
    h = np.asarray(h, dtype=float)
    h0 = np.asarray(h0, dtype=float)
    if np.any(h <= 0) or np.any(h0 <= 0):
        raise ValueError("h and h0 must be positive")
    return -(h0**2) * ddr(np.log(h / h0), grid)


def gauss_curvature(h, grid: RadialGrid) -> np.ndarray:
    """K = -h''/h."""
    return -ddr(h, grid, order=2) / h


def riccati_residual_2d(h, h0, grid: RadialGrid, chart: AngularChart) -> ResidualReport:
    """m' - h0^2 (K - K0) - m^2 / h0^2, with h0 allowed to depend on theta."""
    h = np.asarray(h, dtype=float)
    h0 = np.broadcast_to(np.asarray(h0, dtype=float), h.shape)
    m = mass_2d(h, h0, grid)
    K, K0 = gauss_curvature(h, grid), gauss_curvature(h0, grid)
    res = ddr(m, grid) - h0**2 * (K - K0) - m**2 / h0**2
    return residual_report(res, grid, chart)


def divergence_residual(
    fam: MetricFamily,
    bundle: CurvatureBundle,
    bg: BackgroundWarped,
    rrr,
    rrr0=None,
) -> ResidualReport:
    """Divergence form with u = hb^(3-n) (H - Hb) and div0 U = -u' - Hb u:

        div0 U - hb^(3-n) (R_rr - Rb_rr) - u^2 hb^(n-3) / (n-1) - hb^(3-n) |s|^2.
    """
    _check_same_grid(fam, bundle, bg)
    n = bg.n
    chart = bg.chart
    hb = expand_radial(bg.h, chart)
    Hb = expand_radial(bg.H, chart)
    weight = hb ** (3 - n)
    u = weight * (bundle.H - Hb)
    div = -ddr(u, bg.grid) - Hb * u
    rrr0 = _route_rrr0(bg, rrr0)
    res = div - weight * (rrr - rrr0) - u**2 / weight / (n - 1) - weight * bundle.s2
    return residual_report(res, bg.grid, chart)


def divergence_residual_2d(h, h0, grid: RadialGrid, chart: AngularChart) -> ResidualReport:
    """u = h0 d/dr log(h/h0): (-u' - h0'/h0 u) - h0 (K - K0) - u^2/h0, h0 = h0(r)."""
    h = np.asarray(h, dtype=float)
    h0 = np.broadcast_to(np.asarray(h0, dtype=float), h.shape)
    u = h0 * ddr(np.log(h / h0), grid)
    div = -ddr(u, grid) - ddr(h0, grid) / h0 * u
    K, K0 = gauss_curvature(h, grid), gauss_curvature(h0, grid)
    res = div - h0 * (K - K0) - u**2 / h0
    return residual_report(res, grid, chart)


def total_mass_2d(h, h0, grid: RadialGrid, chart: AngularChart) -> np.ndarray:
    return np.atleast_1d(integrate_N(mass_2d(h, h0, grid), chart))


def radial_integral(values, grid: RadialGrid, chart: AngularChart) -> float:
    """int dr dmu_Ghat of a field on the cylinder (trapezoid in r)."""
    return float(trapezoid_r(integrate_N(values, chart), grid))
