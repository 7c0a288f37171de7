"""Discretisation of the cylinder (a, b) x N.

A :class:`RadialGrid` samples the radial interval, an :class:`AngularChart`
samples the closed cross-section N together with a reference metric Ghat and
quadrature weights for d mu_Ghat.  Fields over the cylinder are numpy arrays
whose leading axis is radial and whose next ``chart.dim`` axes are angular;
matrix-valued fields carry two trailing axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PERIODIC_BOX = "periodic-box"
LATLONG_SPHERE = "latlong-sphere"
CHART_KINDS = (PERIODIC_BOX, LATLONG_SPHERE)

MIN_RADIAL_SAMPLES = 5
MIN_ANGULAR_RESOLUTION = 8


class GridError(ValueError):
    """Invalid radial grid or radial field."""


class ChartError(ValueError):
    """Invalid angular chart or angular field."""


@dataclass(frozen=True)
class RadialGrid:
    """Uniform samples of [a + inset, b - inset]."""

    a: float
    b: float
    nr: int
    inset: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise GridError(f"grid bounds must be finite, got ({self.a}, {self.b})")
        if not math.isfinite(self.inset) or self.inset < 0:
            raise GridError(f"inset must be a finite non-negative number, got {self.inset}")
        if int(self.nr) != self.nr or self.nr < MIN_RADIAL_SAMPLES:
            raise GridError(f"nr must be an integer >= {MIN_RADIAL_SAMPLES}, got {self.nr}")
        if not self.a + self.inset < self.b - self.inset:
            raise GridError(
                f"degenerate interval: [{self.a} + {self.inset}, {self.b} - {self.inset}] is empty"
            )

    @property
    def start(self) -> float:
        return self.a + self.inset

    @property
    def stop(self) -> float:
        return self.b - self.inset

    @property
    def dr(self) -> float:
        return (self.stop - self.start) / (self.nr - 1)

    @cached_property
    def r(self) -> np.ndarray:
        r = np.linspace(self.start, self.stop, self.nr)
        r.flags.writeable = False
        return r

    def refined(self, factor: int = 2) -> RadialGrid:
        """Same interval with the spacing divided by ``factor``; old samples are kept."""
        return RadialGrid(self.a, self.b, (self.nr - 1) * factor + 1, self.inset)

    def index_of(self, value: float) -> int:
        """Index of the sample nearest to ``value``."""
        return int(np.argmin(np.abs(self.r - value)))


def build_radial_grid(a: float, b: float, nr: int, inset: float = 0.0) -> RadialGrid:
    return RadialGrid(float(a), float(b), int(nr), float(inset))


@dataclass(frozen=True, eq=False)
class AngularChart:
    """Nodes, reference metric and quadrature weights on N.

    ``ghat`` has shape ``shape + (dim, dim)`` and ``weights`` has shape
    ``shape``.  Periodic boxes use the trapezoid rule on every axis.  The
    lat-long sphere uses polar nodes offset by half a cell (no node on a
    pole) and exact cell areas as weights, so constants integrate exactly.
    """

    kind: str
    axes: tuple[np.ndarray, ...]
    spacing: tuple[float, ...]
    periods: tuple[float, ...]
    ghat: np.ndarray
    weights: np.ndarray
    label: str = ""
    reference_volume: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def n(self) -> int:
        """Dimension of the cylinder (a, b) x N."""
        return self.dim + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(ax) for ax in self.axes)

    @property
    def resolutions(self) -> tuple[int, ...]:
        return self.shape

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @property
    def volume(self) -> float:
        """Quadrature approximation of the Ghat-volume of N."""
        return float(self.weights.sum())

    @property
    def is_periodic_box(self) -> bool:
        return self.kind == PERIODIC_BOX

    def scaled(self, factor: float) -> AngularChart:
        """Chart with Ghat replaced by ``factor * Ghat`` (factor > 0)."""
        if factor <= 0:
            raise ChartError("metric scale factor must be positive")
        ref = None if self.reference_volume is None else self.reference_volume * factor ** (self.dim / 2)
        return AngularChart(
            kind=self.kind,
            axes=self.axes,
            spacing=self.spacing,
            periods=self.periods,
            ghat=self.ghat * factor,
            weights=self.weights * factor ** (self.dim / 2),
            label=f"{factor:g}*{self.label}",
            reference_volume=ref,
            metadata=dict(self.metadata),
        )

    def refined(self, factor: int = 2) -> AngularChart:
        """Same chart with every resolution multiplied by ``factor``."""
        spec = self.metadata.get("ghat_spec", "flat")
        return build_chart(
            self.kind,
            self.dim,
            [res * factor for res in self.shape],
            spec,
            periods=self.periods if self.kind == PERIODIC_BOX else None,
            params=self.metadata.get("params"),
        )


def _check_positive_definite(ghat: np.ndarray) -> None:
    eig = np.linalg.eigvalsh(ghat)
    bad = np.argwhere(eig[..., 0] <= 0)
    if bad.size:
        raise ChartError(f"reference metric is not positive definite at node {tuple(bad[0])}")


def build_chart(
    kind: str,
    dim: int,
    resolutions,
    ghat_spec="flat",
    *,
    periods=None,
    params: dict | None = None,
) -> AngularChart:
    """Build an angular chart.

    ``ghat_spec`` is ``"flat"`` (identity, periodic boxes), ``"round"``
    (unit round 2-sphere, lat-long charts) or a ``dim x dim`` matrix of
    expressions in ``x1 .. x3`` (periodic boxes only).
    """
    if kind not in CHART_KINDS:
        raise ChartError(f"unknown chart kind {kind!r}; expected one of {CHART_KINDS}")
    if not 1 <= dim <= 3:
        raise ChartError(f"chart dimension must be 1, 2 or 3, got {dim}")
    resolutions = tuple(int(v) for v in np.atleast_1d(resolutions))
    if len(resolutions) == 1 and dim > 1:
        resolutions = resolutions * dim
    if len(resolutions) != dim:
        raise ChartError(f"expected {dim} resolutions, got {len(resolutions)}")
    if any(res < MIN_ANGULAR_RESOLUTION for res in resolutions):
        raise ChartError(f"every resolution must be >= {MIN_ANGULAR_RESOLUTION}, got {resolutions}")

    if kind == LATLONG_SPHERE:
        if dim != 2:
            raise ChartError("latlong-sphere charts are 2-dimensional")
        if ghat_spec not in ("round", "round-sphere"):
            raise ChartError("latlong-sphere charts only support the round reference metric")
        return _latlong_sphere(resolutions)

    if periods is None:
        periods = (2 * math.pi,) * dim
    periods = tuple(float(p) for p in np.atleast_1d(periods))
    if len(periods) == 1 and dim > 1:
        periods = periods * dim
    if len(periods) != dim or any(not (p > 0 and math.isfinite(p)) for p in periods):
        raise ChartError(f"invalid periods {periods} for a {dim}-dimensional box")
    spacing = tuple(p / res for p, res in zip(periods, resolutions))
    axes = tuple(np.arange(res) * h for res, h in zip(resolutions, spacing))
    coords = np.meshgrid(*axes, indexing="ij")
    shape = tuple(resolutions)

    if ghat_spec in ("flat", "identity", None):
        ghat = np.broadcast_to(np.eye(dim), shape + (dim, dim)).copy()
        reference = float(np.prod(periods))
        label = "flat"
    elif isinstance(ghat_spec, str) and ghat_spec in ("round", "round-sphere"):
        raise ChartError("the round reference metric needs a latlong-sphere chart")
    else:
        from .expr import evaluate_matrix

        env = {f"x{i + 1}": c for i, c in enumerate(coords)}
        ghat = evaluate_matrix(ghat_spec, env, params=params, shape=shape)
        if ghat.shape[-2:] != (dim, dim):
            raise ChartError(f"reference metric must be {dim}x{dim}, got {ghat.shape[-2:]}")
        if not np.array_equal(ghat, np.swapaxes(ghat, -1, -2)):
            raise ChartError("reference metric matrix must be symmetric")
        reference = None
        label = "expression"
    _check_positive_definite(ghat)
    weights = np.sqrt(np.linalg.det(ghat)) * float(np.prod(spacing))
    return AngularChart(
        kind=PERIODIC_BOX,
        axes=axes,
        spacing=spacing,
        periods=periods,
        ghat=ghat,
        weights=weights,
        label=label,
        reference_volume=reference,
        metadata={"ghat_spec": ghat_spec, "params": params},
    )


def _latlong_sphere(resolutions: tuple[int, ...]) -> AngularChart:
    ntheta, nphi = resolutions
    dtheta = math.pi / ntheta
    dphi = 2 * math.pi / nphi
    theta = (np.arange(ntheta) + 0.5) * dtheta
    phi = np.arange(nphi) * dphi
    th, _ = np.meshgrid(theta, phi, indexing="ij")
    ghat = np.zeros(th.shape + (2, 2))
    ghat[..., 0, 0] = 1.0
    ghat[..., 1, 1] = np.sin(th) ** 2
    _check_positive_definite(ghat)
    # exact band areas: sin(theta) * 2 sin(dtheta/2) instead of sin(theta) * dtheta
    weights = np.sin(th) * (2 * math.sin(dtheta / 2)) * dphi
    return AngularChart(
        kind=LATLONG_SPHERE,
        axes=(theta, phi),
        spacing=(dtheta, dphi),
        periods=(math.pi, 2 * math.pi),
        ghat=ghat,
        weights=weights,
        label="round",
        reference_volume=4 * math.pi,
        metadata={"ghat_spec": "round"},
    )


def _spacing(grid) -> float:
    return grid.dr if isinstance(grid, RadialGrid) else float(grid)


def ddr(values, grid, order: int = 1) -> np.ndarray:
    """Radial derivative of a sampled field along axis 0.

    Central differences in the interior; one-sided closures at the two end
    samples (second order for ``order=1``, third order for ``order=2``).
    Trailing axes are carried along untouched.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim == 0 or f.shape[0] < MIN_RADIAL_SAMPLES:
        raise GridError(f"ddr needs at least {MIN_RADIAL_SAMPLES} radial samples")
    h = _spacing(grid)
    out = np.empty_like(f)
    if order == 1:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    elif order == 2:
        h2 = h * h
        out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h2
        out[0] = (35 * f[0] - 104 * f[1] + 114 * f[2] - 56 * f[3] + 11 * f[4]) / (12 * h2)
        out[-1] = (35 * f[-1] - 104 * f[-2] + 114 * f[-3] - 56 * f[-4] + 11 * f[-5]) / (12 * h2)
    else:
        raise ValueError(f"order must be 1 or 2, got {order}")
    return out


def dx(values, chart: AngularChart, axis: int, order: int = 1) -> np.ndarray:
    """Periodic central difference along angular ``axis`` (0-based) of a field
    whose angular axes follow a single leading radial axis."""
    if chart.kind != PERIODIC_BOX:
        raise ChartError("tangential differences are only available on periodic-box charts")
    f = np.asarray(values, dtype=float)
    ax = 1 + axis
    h = chart.spacing[axis]
    up = np.roll(f, -1, axis=ax)
    down = np.roll(f, 1, axis=ax)
    if order == 1:
        return (up - down) / (2 * h)
    if order == 2:
        return (up - 2 * f + down) / (h * h)
    raise ValueError(f"order must be 1 or 2, got {order}")


def integrate_N(values, chart: AngularChart) -> np.ndarray | float:
    """Integral over N against d mu_Ghat.

    ``values`` has shape ``(..., *chart.shape)``; leading axes (typically the
    radial one) are kept.
    """
    f = np.asarray(values, dtype=float)
    if f.shape[f.ndim - chart.dim:] != chart.shape:
        raise ChartError(f"field shape {f.shape} does not end with chart shape {chart.shape}")
    if not np.all(np.isfinite(f)):
        raise ChartError("cannot integrate a non-finite field")
    axes = tuple(range(f.ndim - chart.dim, f.ndim))
    out = np.sum(f * chart.weights, axis=axes)
    return float(out) if np.ndim(out) == 0 else out


def trapezoid_r(values, grid: RadialGrid) -> float | np.ndarray:
    """Trapezoid rule over the radial samples (axis 0)."""
    return np.trapezoid(np.asarray(values, dtype=float), dx=grid.dr, axis=0)
