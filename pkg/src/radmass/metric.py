"""Warped-product backgrounds and radial-gauge metric families.

A background is ``g0 = dr^2 + hb(r)^2 Ghat`` where ``hb`` is one of the
model profiles (hyperbolic, euclidean, cylindrical, spherical) or an
expression in ``r``.  A metric family is ``g = dr^2 + G(r, x)`` sampled on a
radial grid times an angular chart.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .chart import AngularChart, RadialGrid, ddr
from .expr import Expr, as_expr, evaluate, evaluate_matrix, names, parse_matrix

PRESETS = ("hyperbolic", "euclidean", "cylindrical", "spherical", "custom")


class MetricError(ValueError):
    """A metric or background failed a construction invariant."""


def parse_call(text: str) -> tuple[str, list[str]]:
    """Split ``"name(arg1, arg2)"`` into ``("name", ["arg1", "arg2"])``."""
    match = re.fullmatch(r"\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*", text)
    if match is None:
        raise MetricError(f"cannot parse {text!r} as name(args)")
    name, inner = match.group(1), match.group(2)
    if inner is None or not inner.strip():
        return name, []
    if name == "custom":
        return name, [inner]
    return name, [part.strip() for part in inner.split(",")]


def _number(text, params=None) -> float:
    return float(evaluate(as_expr(text), dict(params or {})))


def natural_interval(preset: str, k: float = 0.0) -> tuple[float, float]:
    """Interval on which the model profile is positive."""
    if preset == "hyperbolic":
        return (0.5 * math.log(-k), math.inf) if k < 0 else (-math.inf, math.inf)
    if preset == "euclidean":
        return (0.0, math.inf)
    if preset == "cylindrical":
        return (-math.inf, math.inf)
    if preset == "spherical":
        return (0.0, math.pi)
    raise MetricError(f"no natural interval for preset {preset!r}")


def _profile(preset: str, params: dict) -> Callable[[np.ndarray], np.ndarray]:
    if preset == "hyperbolic":
        k = float(params.get("k", 0.0))
        return lambda r: np.exp(r) + k * np.exp(-r)
    if preset == "euclidean":
        return lambda r: np.asarray(r, dtype=float) * 1.0
    if preset == "cylindrical":
        return lambda r: np.ones_like(np.asarray(r, dtype=float))
    if preset == "spherical":
        return np.sin
    if preset == "custom":
        node = as_expr(params["expr"])
        extra = names(node) - {"r", "pi"} - set(params.get("values", {}))
        if extra:
            raise MetricError(f"background profile may depend on r only; unknown names {sorted(extra)}")
        values = dict(params.get("values", {}))
        return lambda r: np.broadcast_to(evaluate(node, {**values, "r": r}), np.shape(r)) * 1.0
    raise MetricError(f"unknown background preset {preset!r}; expected one of {PRESETS}")


@dataclass(frozen=True, eq=False)
class BackgroundWarped:
    """Sampled warped-product background ``dr^2 + hb^2 Ghat``.

    ``dh`` is ``ddr(hb^2) / (2 hb)`` so that the background shape operator
    agrees to rounding with the one obtained from ``Gb = hb^2 Ghat``; ``d2h``
    is the direct second-derivative stencil applied to ``hb``.
    """

    grid: RadialGrid
    chart: AngularChart
    preset: str
    params: dict
    profile: Callable[[np.ndarray], np.ndarray]
    h: np.ndarray
    dh: np.ndarray
    d2h: np.ndarray

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def tag(self) -> str:
        if self.preset == "hyperbolic":
            return f"hyperbolic({self.params.get('k', 0.0):g})"
        if self.preset == "custom":
            return f"custom({self.params['expr']})"
        return self.preset

    @property
    def H(self) -> np.ndarray:
        """Background mean curvature (n-1) hb'/hb per radial sample."""
        return (self.n - 1) * self.dh / self.h

    @property
    def Rrr(self) -> np.ndarray:
        """Background radial Ricci curvature -(n-1) hb''/hb per radial sample."""
        return -(self.n - 1) * self.d2h / self.h

    @property
    def Gb(self) -> np.ndarray:
        """Background slice metric hb^2 Ghat on the full grid."""
        return expand_radial(self.h**2, self.chart)[..., None, None] * self.chart.ghat

    def scaled(self, lam: float) -> BackgroundWarped:
        """The same g0 written with (lam * hb, lam^-2 * Ghat)."""
        if lam <= 0:
            raise MetricError("scale factor must be positive")
        params = dict(self.params)
        profile = self.profile
        return BackgroundWarped(
            grid=self.grid,
            chart=self.chart.scaled(lam**-2),
            preset="custom" if self.preset == "custom" else self.preset,
            params={**params, "scale": params.get("scale", 1.0) * lam},
            profile=lambda r: lam * profile(r),
            h=self.h * lam,
            dh=self.dh * lam,
            d2h=self.d2h * lam,
        )


def expand_radial(values: np.ndarray, chart: AngularChart) -> np.ndarray:
    """Broadcast a per-radial-sample array over the chart nodes."""
    values = np.asarray(values, dtype=float)
    return np.broadcast_to(values.reshape(values.shape + (1,) * chart.dim), values.shape + chart.shape)


def make_background(preset, grid: RadialGrid, chart: AngularChart, **params) -> BackgroundWarped:
    """Sample a background profile on ``grid``.

    ``preset`` is a preset name (``hyperbolic`` takes ``k``; ``custom`` takes
    ``expr``) or a call string such as ``"hyperbolic(-1)"`` or
    ``"custom(cosh(r))"``.  ``values`` may hold named parameters for custom
    expressions.
    """
    name, args = parse_call(preset) if isinstance(preset, str) else (preset, [])
    params = dict(params)
    if name == "hyperbolic" and args:
        params["k"] = _number(args[0], params.get("values"))
    if name == "custom" and args:
        params["expr"] = args[0]
    if name == "hyperbolic":
        params.setdefault("k", 0.0)
        params["k"] = float(params["k"])
    if name == "custom" and "expr" not in params:
        raise MetricError("custom background needs an expression")
    profile = _profile(name, params)
    h = np.asarray(profile(grid.r), dtype=float)
    bad = np.flatnonzero(~(h > 0))
    if bad.size:
        raise MetricError(
            f"background profile {name} is not positive at r = {grid.r[bad[0]]:.6g}; "
            "move the grid (or its inset) past the zero"
        )
    dh = ddr(h * h, grid) / (2 * h)
    d2h = ddr(h, grid, order=2)
    return BackgroundWarped(grid, chart, name, params, profile, h, dh, d2h)


@dataclass(frozen=True, eq=False)
class MetricFamily:
    """Sampled slice metrics G(r, x) with shape ``(nr, *chart.shape, d, d)``."""

    grid: RadialGrid
    chart: AngularChart
    G: np.ndarray
    provenance: str = "expression"
    background: BackgroundWarped | None = None
    perturbation: np.ndarray | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        d = self.chart.dim
        expected = (self.grid.nr,) + self.chart.shape + (d, d)
        if self.G.shape != expected:
            raise MetricError(f"G has shape {self.G.shape}, expected {expected}")
        if not np.array_equal(self.G, np.swapaxes(self.G, -1, -2)):
            raise MetricError("G must be symmetric")
        if not np.all(np.isfinite(self.G)):
            raise MetricError("G has non-finite entries")
        _check_pd(self.G, self.grid, "G")

    @property
    def n(self) -> int:
        return self.chart.n

    @cached_property
    def dG(self) -> np.ndarray:
        return ddr(self.G, self.grid)

    @cached_property
    def d2G(self) -> np.ndarray:
        return ddr(self.dG, self.grid)

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.G)


def _check_pd(G: np.ndarray, grid: RadialGrid, what: str) -> None:
    if G.shape[-1] == 1:
        lowest = G[..., 0, 0]
    else:
        lowest = np.linalg.eigvalsh(G)[..., 0]
    bad = np.argwhere(~(lowest > 0))
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise MetricError(
            f"{what} is not positive definite at r = {grid.r[idx[0]]:.6g}, node {idx[1:]}"
        )


def _grid_env(grid: RadialGrid, chart: AngularChart) -> dict:
    shape = (grid.nr,) + chart.shape
    env = {"r": expand_radial(grid.r, chart)}
    for i, c in enumerate(chart.coords):
        env[f"x{i + 1}"] = np.broadcast_to(c, shape)
    return env


def background_family(bg: BackgroundWarped) -> MetricFamily:
    """g = g0 itself."""
    return MetricFamily(
        bg.grid,
        bg.chart,
        bg.Gb.copy(),
        provenance="background",
        background=bg,
        perturbation=np.zeros((bg.grid.nr,) + bg.chart.shape + (bg.chart.dim,) * 2),
    )


def make_perturbed_family(bg: BackgroundWarped, P, B="1", *, params: dict | None = None) -> MetricFamily:
    """G = hb^2 (Ghat + B(r, x) P(r, x)).

    ``P`` is a matrix of expressions or the string ``"ghat"``; ``B`` is an
    expression.
    """
    grid, chart = bg.grid, bg.chart
    env = _grid_env(grid, chart)
    shape = (grid.nr,) + chart.shape
    full = {**(params or {}), **env}
    profile = np.broadcast_to(evaluate(as_expr(B), full), shape)
    if isinstance(P, str) and P.strip().lower() == "ghat":
        pmat = np.broadcast_to(chart.ghat, shape + chart.ghat.shape[-2:])
    else:
        pmat = evaluate_matrix(P, env, params=params, shape=shape)
        if pmat.shape[-1] != chart.dim:
            raise MetricError(f"perturbation must be {chart.dim}x{chart.dim}")
        if not np.array_equal(pmat, np.swapaxes(pmat, -1, -2)):
            raise MetricError("perturbation matrix must be symmetric")
    Gbar = profile[..., None, None] * pmat
    inner = chart.ghat + Gbar
    try:
        _check_pd(inner, grid, "Ghat + B*P")
    except MetricError as exc:
        raise MetricError(f"perturbed family loses positive definiteness: {exc}") from None
    G = expand_radial(bg.h**2, chart)[..., None, None] * inner
    return MetricFamily(
        grid,
        chart,
        G,
        provenance="perturbed",
        background=bg,
        perturbation=Gbar,
        details={"P": P, "B": B},
    )


def schwarzschild_areal_radius(r: np.ndarray, mass: float, rho0: float) -> np.ndarray:
    """Invert the arc length r(rho) = int_rho0^rho (1 - 2M/s)^(-1/2) ds.

    Each sample is found by bracketed root finding starting from its
    neighbour; dr/drho >= 1 bounds the bracket width by |dr|.
    """
    if mass <= 0:
        raise MetricError("Schwarzschild mass must be positive")
    horizon = 2 * mass
    if rho0 <= horizon:
        raise MetricError(f"rho0 = {rho0} must exceed 2M = {horizon}")

    def speed(s):
        return 1.0 / math.sqrt(1.0 - horizon / s)

    r = np.asarray(r, dtype=float)
    order = np.argsort(r)
    rho = np.empty_like(r)

    def march(indices):
        r_prev, rho_prev = 0.0, rho0
        for j in indices:
            target = r[j]
            step = target - r_prev
            if step == 0:
                rho[j] = rho_prev
                continue

            def f(x, r_prev=r_prev, rho_prev=rho_prev, target=target):
                return r_prev + integrate.quad(speed, rho_prev, x, epsabs=1e-15, epsrel=1e-13)[0] - target

            if step > 0:
                lo, hi = rho_prev, rho_prev + step
            else:
                lo, hi = max(horizon * (1 + 1e-15), rho_prev + step), rho_prev
                if f(lo) > 0:
                    raise MetricError(
                        f"grid sample r = {target:.6g} lies inside the horizon rho = 2M; "
                        "start the grid further out"
                    )
            rho[j] = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
            r_prev, rho_prev = target, rho[j]

    march([j for j in order if r[j] >= 0])
    march([j for j in order[::-1] if r[j] < 0])
    return rho


BUILTINS = ("schwarzschild", "round-sphere-2d", "cone", "background")


def eval_metric_family(
    spec,
    grid: RadialGrid,
    chart: AngularChart,
    *,
    params: dict | None = None,
    background: BackgroundWarped | None = None,
) -> MetricFamily:
    """Family from a builtin name or a matrix of expressions in r, x1..x3.

    Builtins: ``schwarzschild(M[, rho0])`` (rho0 defaults to 4M and is the
    areal radius at r = 0), ``round-sphere-2d``, ``cone(c)`` and
    ``background`` (needs ``background=``).
    """
    if isinstance(spec, str):
        try:
            name, args = parse_call(spec)
        except MetricError:
            name, args = "", []
        if name in BUILTINS:
            return _builtin(name, [_number(a, params) for a in args], grid, chart, background)
    env = _grid_env(grid, chart)
    shape = (grid.nr,) + chart.shape
    G = evaluate_matrix(spec, env, params=params, shape=shape)
    if G.shape[-1] != chart.dim:
        raise MetricError(f"metric matrix must be {chart.dim}x{chart.dim}, got {G.shape[-1]}")
    return MetricFamily(grid, chart, G, provenance="expression", background=background,
                        details={"spec": spec})


def _builtin(name, args, grid, chart, background) -> MetricFamily:
    ghat = chart.ghat
    r = grid.r
    if name == "schwarzschild":
        if chart.dim != 2:
            raise MetricError("schwarzschild(M) is a 3-dimensional family (2-dimensional chart)")
        if not 1 <= len(args) <= 2:
            raise MetricError("usage: schwarzschild(M[, rho0])")
        mass = args[0]
        rho0 = args[1] if len(args) > 1 else 4 * mass
        rho = schwarzschild_areal_radius(r, mass, rho0)
        G = expand_radial(rho**2, chart)[..., None, None] * ghat
        return MetricFamily(grid, chart, G, provenance=f"builtin:schwarzschild({mass:g},{rho0:g})",
                            background=background, details={"rho": rho, "mass": mass, "rho0": rho0})
    if name == "round-sphere-2d":
        if chart.dim != 1:
            raise MetricError("round-sphere-2d is a 2-dimensional family (1-dimensional chart)")
        G = expand_radial(np.sin(r) ** 2, chart)[..., None, None] * ghat
        return MetricFamily(grid, chart, G, provenance="builtin:round-sphere-2d", background=background)
    if name == "cone":
        if len(args) != 1:
            raise MetricError("usage: cone(c)")
        c = args[0]
        G = expand_radial(r**2 + c * r, chart)[..., None, None] * ghat
        return MetricFamily(grid, chart, G, provenance=f"builtin:cone({c:g})", background=background,
                            details={"c": c})
    if name == "background":
        if background is None:
            raise MetricError("the 'background' family needs a background")
        return background_family(background)
    raise MetricError(f"unknown builtin family {name!r}")


def h_field(values, grid: RadialGrid, chart: AngularChart, params: dict | None = None) -> np.ndarray:
    """Sample a 2D warping function h(r, theta) given as an expression or callable."""
    env = _grid_env(grid, chart)
    shape = (grid.nr,) + chart.shape
    if callable(values):
        out = np.broadcast_to(values(env["r"], *[env[f"x{i + 1}"] for i in range(chart.dim)]), shape)
    else:
        out = np.broadcast_to(evaluate(as_expr(values), {**(params or {}), **env}), shape)
    return np.array(out, dtype=float)


def family_from_h(h: np.ndarray, grid: RadialGrid, chart: AngularChart, background=None) -> MetricFamily:
    """2D family g = dr^2 + h^2 dtheta^2 (requires a flat 1-dimensional chart)."""
    if chart.dim != 1:
        raise MetricError("h-families are 2-dimensional")
    G = (np.asarray(h, dtype=float) ** 2)[..., None, None] * chart.ghat
    return MetricFamily(grid, chart, G, provenance="h-field", background=background)


__all__ = [
    "BackgroundWarped",
    "MetricError",
    "MetricFamily",
    "background_family",
    "eval_metric_family",
    "expand_radial",
    "family_from_h",
    "h_field",
    "make_background",
    "make_perturbed_family",
    "natural_interval",
    "parse_call",
    "schwarzschild_areal_radius",
    "Expr",
    "parse_matrix",
]
