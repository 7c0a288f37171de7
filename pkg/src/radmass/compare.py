"""Comparison with two classical masses.

* The Hawking mass of the level sets N(r) of a 3-dimensional family,
  ``m_H = sqrt(A) / (16 pi)^(3/2) * (16 pi - int H^2 dnu)``.
* The radial component of the Chrusciel-Herzlich flux field for 2D metrics
  ``dr^2 + h^2 dtheta^2`` asymptotic to ``dr^2 + h0^2 dtheta^2`` with
  ``h0 = e^r + k e^-r``:

      U^r = h^-1 [(h^2 - h0^2) V' - 2 V (h h' - h^2 h0'/h0)].

  Asymptotically its angular integral p is three times the radial mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chart import ddr, integrate_N
from .curvature import CurvatureBundle, shape_bundle
from .mass import radial_mass
from .metric import BackgroundWarped, MetricError, MetricFamily

HAWKING_NORM = (16 * math.pi) ** 1.5


@dataclass(frozen=True, eq=False)
class HawkingSample:
    r: np.ndarray
    A: np.ndarray
    H_integral: np.ndarray
    m_H: np.ndarray

    def recompute(self) -> np.ndarray:
        return np.sqrt(self.A) / HAWKING_NORM * (16 * math.pi - self.H_integral)


def hawking_mass(fam: MetricFamily, bundle: CurvatureBundle | None = None) -> HawkingSample:
    """Hawking mass of every level set, with induced weights sqrt(det G) dx."""
    if fam.n != 3:
        raise MetricError(f"the Hawking mass needs n = 3, got n = {fam.n}")
    bundle = bundle or shape_bundle(fam)
    chart = fam.chart
    det_hat = np.linalg.det(np.broadcast_to(chart.ghat, chart.shape + (2, 2)))
    ratio = np.sqrt(fam.det / det_hat)
    A = np.atleast_1d(integrate_N(ratio, chart))
    H_int = np.atleast_1d(integrate_N(bundle.H**2 * ratio, chart))
    m_H = np.sqrt(A) / HAWKING_NORM * (16 * math.pi - H_int)
    return HawkingSample(fam.grid.r.copy(), A, H_int, m_H)


@dataclass(frozen=True, eq=False)
class HawkingTable:
    r: np.ndarray
    M: np.ndarray
    eight_pi_mH: np.ndarray
    ratio: np.ndarray

    def rows(self):
        return zip(self.r, self.M, self.eight_pi_mH, self.ratio)


def hawking_vs_radial(fam: MetricFamily, bg: BackgroundWarped) -> HawkingTable:
    """Tabulate M(r) beside 8 pi m_H(r); no verdict is attached."""
    if bg.preset != "euclidean":
        raise MetricError("the Hawking comparison uses the euclidean background")
    bundle = shape_bundle(fam)
    M = radial_mass(bundle, bg).M
    mh = 8 * math.pi * hawking_mass(fam, bundle).m_H
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mh != 0, M / np.where(mh != 0, mh, 1.0), np.nan)
    return HawkingTable(fam.grid.r.copy(), M, mh, ratio)


@dataclass(frozen=True, eq=False)
class FluxSample:
    r: np.ndarray
    Ur: np.ndarray
    p: np.ndarray
    M: np.ndarray
    V: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.p / self.M


def ch_flux(h, bg: BackgroundWarped, V=None, *, delta=None) -> FluxSample:
    """Flux field U^r, p = int U^r dtheta and M for a 2D family against ``bg``.

    ``h`` is sampled on ``bg``'s grid and chart.  Passing ``delta = h - h0``
    as well avoids the cancellation in h/h0 - 1 far out, where h0 is large.
    ``V`` defaults to h0.
    """
    if bg.n != 2:
        raise MetricError("the flux field is defined for n = 2")
    if bg.preset != "hyperbolic":
        raise MetricError("the flux field needs a background h0 = e^r + k e^-r")
    grid, chart = bg.grid, bg.chart
    shape = (grid.nr,) + chart.shape
    h0 = np.broadcast_to(bg.h.reshape((-1,) + (1,) * chart.dim), shape)
    dh0 = np.broadcast_to(bg.dh.reshape((-1,) + (1,) * chart.dim), shape)
    if delta is not None:
        delta = np.broadcast_to(np.asarray(delta, dtype=float), shape)
        h = h0 + delta
    else:
        h = np.broadcast_to(np.asarray(h, dtype=float), shape)
        delta = h - h0
    if np.any(h <= 0):
        bad = np.argwhere(h <= 0)[0]
        raise MetricError(f"h must be positive; h = {h[tuple(bad)]:g} at r = {grid.r[bad[0]]:g}")

    # d/dr log(h/h0), the common factor of m and of the second bracket term
    dlog = ddr(np.log1p(delta / h0), grid)
    if V is None:
        V, dV = h0, dh0
    else:
        V = np.broadcast_to(np.asarray(V, dtype=float), shape)
        dV = ddr(V, grid)
    Ur = (delta * (h + h0) * dV - 2 * V * h**2 * dlog) / h
    if not np.all(np.isfinite(Ur)):
        raise MetricError("flux field is not finite")
    p = np.atleast_1d(integrate_N(Ur, chart))
    M = np.atleast_1d(integrate_N(-(h0**2) * dlog, chart))
    return FluxSample(grid.r.copy(), Ur, p, M, np.asarray(V))
