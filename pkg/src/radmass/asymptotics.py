"""Boundary values of the radial mass.

Two estimators read the mass at an endpoint i from the structure of a
perturbed family ``G = hb^2 (Ghat + Gbar)``:

* F-type, when ``int^i hb^-2`` converges: ``Gbar = F_i Gt`` with
  ``F_i(r) = int_r^i hb^-2`` and
  ``M(i) = 1/2 int_N Tr_Ghat[Gt - hb^2 F_i Gt'](i, .) dmu_Ghat``;
* bar-type, when it diverges: ``M(i) = -1/2 int_N hb^2 Tr_Ghat Gbar'(i, .) dmu_Ghat``.

:func:`extrapolate_limit` estimates the limit directly from sampled M(r).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .chart import ddr, integrate_N
from .metric import BackgroundWarped, MetricError, MetricFamily, expand_radial, natural_interval

F_TYPE = "F-type"
BAR_TYPE = "bar-type"


class ProvenanceError(ValueError):
    """The family was not built as a perturbation of the background."""


class DivergenceError(ValueError):
    """int^i hb^-2 has the wrong convergence behaviour for the estimator."""


def _quad(f, lo, hi) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)[0]


def _cutoffs(r: float, endpoint: float, count: int = 7) -> list[float]:
    if math.isinf(endpoint):
        sign = 1.0 if endpoint > 0 else -1.0
        return [r + sign * 10.0**k for k in range(count)]
    gap = endpoint - r
    return [endpoint - gap * 10.0**-k for k in range(1, count + 1)]


def tail_integral(func, r: float, endpoint: float) -> tuple[float, bool]:
    """(int_r^endpoint func, converged).

    Convergence is judged from the increments over a sequence of cut-offs
    approaching the endpoint geometrically: they must shrink by at least half
    at every step.
    """
    f = lambda s: float(func(s))  # noqa: E731
    cuts = _cutoffs(r, endpoint)
    increments = []
    prev = r
    for c in cuts:
        increments.append(abs(_quad(f, prev, c)))
        prev = c
    tail = increments[-4:]
    converged = all(b <= 0.5 * a or b < 1e-14 for a, b in zip(tail, tail[1:]))
    if not converged:
        return math.inf, False
    return _quad(f, r, endpoint), True


def _endpoint_value(bg: BackgroundWarped, endpoint) -> float:
    """'a'/'b' name the ends of the model's natural interval; custom profiles use -inf/+inf."""
    if endpoint in ("a", "b", None):
        try:
            lo, hi = natural_interval(bg.preset, bg.params.get("k", 0.0))
        except MetricError:
            lo, hi = -math.inf, math.inf
        return lo if endpoint == "a" else hi
    return float(endpoint)


def _inv_square(bg: BackgroundWarped):
    def f(s):
        with np.errstate(over="ignore"):
            return float(bg.profile(np.asarray(s, dtype=float)) ** -2.0)

    return f


def f_samples(bg: BackgroundWarped, endpoint: float) -> np.ndarray:
    """F_i(r) = int_r^i hb^-2 at every radial sample."""
    inv2 = _inv_square(bg)
    r = bg.grid.r
    if endpoint >= r[-1]:
        anchor, converged = tail_integral(inv2, float(r[-1]), endpoint)
        order = range(len(r) - 2, -1, -1)
        step = 1
    else:
        anchor, converged = tail_integral(inv2, float(r[0]), endpoint)
        order = range(1, len(r))
        step = -1
    if not converged:
        raise DivergenceError(f"int^{endpoint:g} hb^-2 diverges; use the bar-type estimator")
    F = np.empty_like(r)
    if step == 1:
        F[-1] = anchor
        for j in order:
            F[j] = F[j + 1] + _quad(inv2, r[j], r[j + 1])
    else:
        F[0] = anchor
        for j in order:
            F[j] = F[j - 1] - _quad(inv2, r[j - 1], r[j])
    return F


@dataclass
class AsymptoticSpec:
    endpoint: float
    kind: str
    F: np.ndarray | None
    perturbation: np.ndarray
    Gt: np.ndarray | None = None


def asymptotic_spec(fam: MetricFamily, bg: BackgroundWarped, endpoint="b") -> AsymptoticSpec:
    """Classify the endpoint and recover Gt = Gbar / F_i or Gbar from provenance."""
    if fam.perturbation is None or fam.background is None:
        raise ProvenanceError("estimators need a family built by make_perturbed_family")
    i = _endpoint_value(bg, endpoint)
    inv2 = _inv_square(bg)
    ref = float(bg.grid.r[-1] if i >= bg.grid.r[-1] else bg.grid.r[0])
    _, converged = tail_integral(inv2, ref, i)
    if converged:
        F = f_samples(bg, i)
        if np.any(F == 0):
            raise DivergenceError("F_i vanishes on the grid; the endpoint must lie outside the sampled interval")
        Gt = fam.perturbation / expand_radial(F, bg.chart)[..., None, None]
        return AsymptoticSpec(i, F_TYPE, F, fam.perturbation, Gt)
    return AsymptoticSpec(i, BAR_TYPE, None, fam.perturbation)


def _trace_ghat(X: np.ndarray, ghat: np.ndarray) -> np.ndarray:
    return np.trace(np.linalg.solve(np.broadcast_to(ghat, X.shape), X), axis1=-2, axis2=-1)


@dataclass
class EstimatorResult:
    value: float
    r: float
    kind: str
    profile: np.ndarray
    flags: dict = field(default_factory=dict)
    limit: float = math.nan
    limit_converged: bool = False


def _profile_limit(profile: np.ndarray, bg: BackgroundWarped, i: float) -> tuple[float, bool]:
    """Fitted limit of the integrand profile at i; the value itself stays at the truncated end."""
    if len(profile) < 8:
        return math.nan, False
    ext = extrapolate_limit(bg.grid.r, profile, i)
    return ext.value, ext.converged


def _end_index(bg: BackgroundWarped, i: float) -> int:
    return -1 if i >= bg.grid.r[-1] else 0


def estimator_infinity(fam: MetricFamily, bg: BackgroundWarped, endpoint="b", *, literal: bool = False) -> EstimatorResult:
    """F-type estimator, read at the grid end nearest i.

    ``limit`` holds the profile's fitted limit at i as a diagnostic for
    families whose o(1) terms are still visible at the truncated endpoint.

    ``literal=True`` uses -1/2 Tr_Ghat[Gt + hb^2 F_i Gt'] instead of the
    form that agrees with the direct mass.
    """
    spec = asymptotic_spec(fam, bg, endpoint)
    if spec.kind != F_TYPE:
        raise DivergenceError("int^i hb^-2 diverges here; use estimator_base")
    Gt, F = spec.Gt, expand_radial(spec.F, bg.chart)[..., None, None]
    dGt = ddr(Gt, bg.grid)
    hb2 = expand_radial(bg.h**2, bg.chart)[..., None, None]
    if literal:
        integrand = -0.5 * _trace_ghat(Gt + hb2 * F * dGt, bg.chart.ghat)
    else:
        integrand = 0.5 * _trace_ghat(Gt - hb2 * F * dGt, bg.chart.ghat)
    profile = np.atleast_1d(integrate_N(integrand, bg.chart))
    idx = _end_index(bg, spec.endpoint)
    limit, ok = _profile_limit(profile, bg, spec.endpoint)
    return EstimatorResult(float(profile[idx]), float(bg.grid.r[idx]), F_TYPE, profile,
                           limit=limit, limit_converged=ok)


def estimator_base(fam: MetricFamily, bg: BackgroundWarped, endpoint="a") -> EstimatorResult:
    """Bar-type estimator -1/2 int_N hb^2 Tr_Ghat Gbar' at the truncated endpoint."""
    spec = asymptotic_spec(fam, bg, endpoint)
    if spec.kind != BAR_TYPE:
        raise DivergenceError("int^i hb^-2 converges here; use estimator_infinity")
    Gbar = spec.perturbation
    dGbar = ddr(Gbar, bg.grid)
    hb2 = expand_radial(bg.h**2, bg.chart)
    integrand = -0.5 * hb2 * _trace_ghat(dGbar, bg.chart.ghat)
    profile = np.atleast_1d(integrate_N(integrand, bg.chart))
    idx = _end_index(bg, spec.endpoint)

    # decay / boundedness of the hypotheses, compared across a window near i
    axes = tuple(range(1, Gbar.ndim))
    size_bar = np.max(np.abs(Gbar), axis=axes)
    size_mixed = np.abs(bg.h * bg.dh) * size_bar
    size_deriv = np.max(np.abs(hb2[..., None, None] * dGbar), axis=axes)
    w = max(8, bg.grid.nr // 4)
    window = slice(-w, None) if idx == -1 else slice(0, w)

    def shrinking(values):
        v = values[window]
        far, near = (v[0], v[-1]) if idx == -1 else (v[-1], v[0])
        return bool(near <= far)

    flags = {
        "Gbar_o1": shrinking(size_bar),
        "hbhb'Gbar_o1": shrinking(size_mixed),
        "hb2Gbar'_O1": bool(np.all(np.isfinite(size_deriv[window]))
                            and size_deriv[window].max() <= 10 * max(size_deriv[window].min(), 1e-300) + 1.0),
        "Gbar_end": float(size_bar[idx]),
        "hbhb'Gbar_end": float(size_mixed[idx]),
        "hb2Gbar'_end": float(size_deriv[idx]),
    }
    limit, ok = _profile_limit(profile, bg, spec.endpoint)
    return EstimatorResult(float(profile[idx]), float(bg.grid.r[idx]), BAR_TYPE, profile, flags,
                           limit=limit, limit_converged=ok)


@dataclass
class Extrapolation:
    value: float
    rate: str | None
    residual: float
    drift: float
    converged: bool
    candidates: dict = field(default_factory=dict)


def _rates(endpoint: float) -> dict:
    if endpoint == math.inf:
        return {"1/r": lambda r: 1 / r, "exp(-r)": lambda r: np.exp(-r), "exp(-2r)": lambda r: np.exp(-2 * r)}
    if endpoint == -math.inf:
        return {"1/r": lambda r: 1 / np.abs(r), "exp(-r)": lambda r: np.exp(r), "exp(-2r)": lambda r: np.exp(2 * r)}
    p = endpoint
    return {"r": lambda r: np.abs(r - p), "r^2": lambda r: (r - p) ** 2}


def _fit(r, M, rho):
    x = rho(r)
    scale = np.max(np.abs(x))
    if not np.isfinite(scale) or scale == 0:
        return None
    x = x / scale
    A = np.stack([np.ones_like(x), x, x * x], axis=1)
    coef, *_ = np.linalg.lstsq(A, M, rcond=None)
    resid = M - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(resid**2)))


def extrapolate_limit(
    r,
    M,
    endpoint,
    *,
    window: int | None = None,
    fit_tol: float = 1e-6,
    drift_tol: float = 1e-4,
) -> Extrapolation:
    """Limit of M(r) at ``endpoint`` (a number, +inf or -inf).

    Fits M = L + c1 rho + c2 rho^2 on the samples nearest the endpoint for
    each candidate rate rho, keeps the best relative residual and requires
    the limits fitted on the two halves of the window to agree.
    """
    r = np.asarray(r, dtype=float)
    M = np.asarray(M, dtype=float)
    endpoint = float(endpoint)
    if window is None:
        window = max(8, len(r) // 4)
    if len(r) < 8 or window < 8:
        raise ValueError("need at least 8 samples near the endpoint")
    at_top = endpoint >= r[-1]
    sl = slice(len(r) - window, None) if at_top else slice(0, window)
    rw, Mw = r[sl], M[sl]
    last = float(M[-1] if at_top else M[0])
    scale = max(float(np.max(np.abs(Mw))), float(np.ptp(Mw)), 1e-300)
    half = window // 2
    candidates = {}
    for name, rho in _rates(endpoint).items():
        full = _fit(rw, Mw, rho)
        first = _fit(rw[:half], Mw[:half], rho)
        second = _fit(rw[half:], Mw[half:], rho)
        if full is None or first is None or second is None:
            continue
        value, res = full
        drift = abs(first[0] - second[0])
        candidates[name] = (value, res / scale, drift)
    if not candidates:
        return Extrapolation(last, None, math.inf, math.inf, False, candidates)
    best = min(candidates, key=lambda k: (candidates[k][1], candidates[k][2]))
    value, res, drift = candidates[best]
    ok = res <= fit_tol and drift <= drift_tol * max(1.0, abs(value))
    if not ok:
        return Extrapolation(last, best, res, drift, False, candidates)
    return Extrapolation(value, best, res, drift, True, candidates)
