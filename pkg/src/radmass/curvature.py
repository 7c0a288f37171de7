"""Level-set shape data and radial Ricci curvature.

The shape operator of N(r) is ``S = 1/2 G^-1 G'`` (row index up, column
index down), its trace is the mean curvature H and ``s`` is its trace-free
part.  :func:`ricci_oracle` recomputes the curvature of the full metric
``dr^2 + G`` from Christoffel symbols, independently of these formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import PERIODIC_BOX, AngularChart, ChartError, RadialGrid, ddr, dx
from .metric import BackgroundWarped, MetricFamily, background_family, expand_radial


@dataclass(frozen=True, eq=False)
class CurvatureBundle:
    family: MetricFamily
    S: np.ndarray
    II: np.ndarray
    H: np.ndarray
    s: np.ndarray
    s2: np.ndarray
    S2: np.ndarray

    @property
    def grid(self) -> RadialGrid:
        return self.family.grid

    @property
    def chart(self) -> AngularChart:
        return self.family.chart

    @property
    def n(self) -> int:
        return self.family.n


def shape_bundle(fam: MetricFamily) -> CurvatureBundle:
    G, dG = fam.G, fam.dG
    try:
        S = 0.5 * np.linalg.solve(G, dG)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular slice metric: {exc}") from None
    d = fam.chart.dim
    H = np.trace(S, axis1=-2, axis2=-1)
    s = S - (H / d)[..., None, None] * np.eye(d)
    s2 = np.einsum("...ab,...ba->...", s, s)
    S2 = np.einsum("...ab,...ba->...", S, S)
    return CurvatureBundle(fam, S, 0.5 * dG, H, s, s2, S2)


@dataclass(frozen=True)
class BackgroundShape:
    H: np.ndarray
    S: np.ndarray
    Rrr: np.ndarray


def background_shape(bg: BackgroundWarped) -> BackgroundShape:
    """Per radial sample: Hb = (n-1) hb'/hb, Sb = (hb'/hb) I and Rb_rr = -(n-1) hb''/hb."""
    d = bg.chart.dim
    ratio = bg.dh / bg.h
    return BackgroundShape(H=d * ratio, S=ratio[:, None, None] * np.eye(d), Rrr=bg.Rrr)


def radial_ricci(bundle: CurvatureBundle) -> np.ndarray:
    """R_rr = -H' - |S|^2."""
    return -ddr(bundle.H, bundle.grid) - bundle.S2


def background_radial_ricci(bg: BackgroundWarped) -> np.ndarray:
    """Rb_rr from the background shape operator, -Hb' - Hb^2/(n-1), on the full grid.

    This is the same discrete route as :func:`radial_ricci`, so it agrees
    with ``radial_ricci(shape_bundle(background_family(bg)))`` to rounding.
    """
    H = bg.H
    values = -ddr(H, bg.grid) - H**2 / bg.chart.dim
    return np.array(expand_radial(values, bg.chart))


@dataclass(frozen=True)
class OracleCurvature:
    ricci: np.ndarray
    mixed: np.ndarray

    @property
    def rrr(self) -> np.ndarray:
        return self.ricci[..., 0, 0]


def _partial(values: np.ndarray, axis: int, grid: RadialGrid, chart: AngularChart, order: int = 1):
    if axis == 0:
        return ddr(values, grid, order=order)
    return dx(values, chart, axis - 1, order=order)


def ricci_oracle(fam: MetricFamily) -> OracleCurvature:
    """Ricci tensor and R^B_{rAr} of ``dr^2 + G`` by finite differences.

    Uses the second-derivative form of the covariant Riemann tensor,

        R_iklm = 1/2 (d_k d_l g_im + d_i d_m g_kl - d_k d_m g_il - d_i d_l g_km)
                 + g_np (Gam^n_kl Gam^p_im - Gam^n_km Gam^p_il),

    with compact three-point stencils for pure second derivatives, so its
    truncation error differs from the shape-operator route.  The sign
    convention gives R_rr = +1 for G = sin^2(r) dtheta^2.
    """
    chart, grid = fam.chart, fam.grid
    if chart.kind != PERIODIC_BOX:
        raise ChartError("ricci_oracle needs a periodic-box chart (tangential differences wrap)")
    n = fam.n
    pts = (grid.nr,) + chart.shape
    g = np.zeros(pts + (n, n))
    g[..., 0, 0] = 1.0
    g[..., 1:, 1:] = fam.G

    dg = np.empty(pts + (n, n, n))
    for a in range(n):
        dg[..., a, :, :] = _partial(g, a, grid, chart)
    d2g = np.empty(pts + (n, n, n, n))
    for a in range(n):
        d2g[..., a, a, :, :] = _partial(g, a, grid, chart, order=2)
        for b in range(a + 1, n):
            mixed = _partial(dg[..., b, :, :], a, grid, chart)
            d2g[..., a, b, :, :] = mixed
            d2g[..., b, a, :, :] = mixed
    ginv = np.linalg.inv(g)

    # first kind: low[p, i, m] = 1/2 (d_i g_mp + d_m g_ip - d_p g_im)
    low = 0.5 * (
        np.einsum("...imp->...pim", dg)
        + np.einsum("...mip->...pim", dg)
        - dg
    )
    gam = np.einsum("...np,...pim->...nim", ginv, low)

    t = d2g
    R = 0.5 * (
        np.einsum("...klim->...iklm", t)
        + np.einsum("...imkl->...iklm", t)
        - np.einsum("...kmil->...iklm", t)
        - np.einsum("...ilkm->...iklm", t)
    )
    R += np.einsum("...nkl,...nim->...iklm", gam, low)
    R -= np.einsum("...nkm,...nil->...iklm", gam, low)
    del t, d2g

    ricci = np.einsum("...il,...iklm->...km", ginv, R)
    # R^B_{rAr} = g^{BC} R_{C r A r}
    mixed = np.einsum("...bc,...ca->...ba", ginv[..., 1:, 1:], R[..., 1:, 0, 1:, 0])
    return OracleCurvature(ricci=ricci, mixed=mixed)


def riccati_matrix(bundle: CurvatureBundle) -> np.ndarray:
    """-S' - S.S, the shape-operator side of the mixed curvature identity."""
    S = bundle.S
    return -ddr(S, bundle.grid) - np.einsum("...bc,...ca->...ba", S, S)


def background_oracle_rrr(bg: BackgroundWarped) -> np.ndarray:
    return ricci_oracle(background_family(bg)).rrr
