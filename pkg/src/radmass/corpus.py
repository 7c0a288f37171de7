"""Reference families used by the acceptance checks and the test-suite.

Each case builds ``(family, background)`` at a given refinement factor of its
baseline grid (401 radial samples).  ``warped`` marks families that are warped
products of the background's profile, where the equality defect vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .chart import build_chart, build_radial_grid
from .metric import (
    BackgroundWarped,
    MetricFamily,
    background_family,
    eval_metric_family,
    family_from_h,
    h_field,
    make_background,
    make_perturbed_family,
)

BASE_NR = 401


@dataclass(frozen=True)
class CorpusCase:
    name: str
    warped: bool
    build: Callable[[int], tuple[MetricFamily, BackgroundWarped]]
    torus: bool = True


def _grid(a, b, refine):
    return build_radial_grid(a, b, (BASE_NR - 1) * refine + 1)


def _torus(dim, res, refine):
    return build_chart("periodic-box", dim, res * refine)


def _sphere(refine):
    return build_chart("latlong-sphere", 2, (16 * refine, 32 * refine), "round")


def riccati_family(refine: int = 1, nang: int = 8):
    """n = 3 hyperbolic(k=1) torus family hb^2 [Ghat + 0.1 e^-2r diag(1, -1)] on (0, 1)."""
    bg = make_background("hyperbolic", _grid(0, 1, refine), _torus(2, nang, refine), k=1)
    return make_perturbed_family(bg, "1, 0; 0, -1", "0.1*exp(-2*r)"), bg


def _hyperbolic_background(refine):
    bg = make_background("hyperbolic", _grid(0, 2, refine), _torus(2, 8, refine), k=0)
    return background_family(bg), bg


def _hyperbolic_double(refine):
    bg = make_background("hyperbolic", _grid(0, 2, refine), _torus(2, 8, refine), k=0)
    return make_perturbed_family(bg, "ghat", "1"), bg


def _hyperbolic_angular(refine):
    bg = make_background("hyperbolic", _grid(0, 1, refine), _torus(2, 8, refine), k=0)
    P = "0.5 + 0.2*sin(x1), 0.1*cos(x2); 0.1*cos(x2), 0.5 - 0.2*sin(x1)"
    return make_perturbed_family(bg, P, "0.2*exp(-2*r)"), bg


def _cone(refine):
    bg = make_background("euclidean", _grid(1, 2, refine), _sphere(refine))
    return eval_metric_family("cone(1)", bg.grid, bg.chart), bg


def _spherical(refine):
    bg = make_background("spherical", _grid(0.3, 2.8, refine), _sphere(refine))
    return make_perturbed_family(bg, "ghat", "0.1*sin(r)^2"), bg


def _cylindrical(refine):
    bg = make_background("cylindrical", _grid(0, 2, refine), _torus(2, 8, refine))
    return make_perturbed_family(bg, "1, 0; 0, 0.5", "0.2*exp(-r)"), bg


def _four_dim(refine):
    # m and the integrated identity only use radial derivatives; keep the 3-torus coarse
    bg = make_background("hyperbolic", _grid(0, 0.5, refine), _torus(3, 8, 1), k=0)
    P = "1, 0, 0; 0, -1, 0; 0, 0, 0.5*cos(x3)"
    return make_perturbed_family(bg, P, "0.1*exp(-2*r)"), bg


def _two_dim(refine):
    grid, chart = _grid(0, 1, refine), _torus(1, 16, refine)
    bg = make_background("hyperbolic", grid, chart, k=0)
    h = h_field("exp(r)*(1 + 0.1*exp(-2*r)*(1 + 0.3*cos(x1)))", grid, chart)
    return family_from_h(h, grid, chart, background=bg), bg


CORPUS = (
    CorpusCase("hyperbolic-k1-diag", False, riccati_family),
    CorpusCase("hyperbolic-background", True, _hyperbolic_background),
    CorpusCase("hyperbolic-warped-2ghat", True, _hyperbolic_double),
    CorpusCase("hyperbolic-angular", False, _hyperbolic_angular),
    CorpusCase("euclidean-cone", False, _cone, torus=False),
    CorpusCase("spherical-perturbed", False, _spherical, torus=False),
    CorpusCase("cylindrical-perturbed", False, _cylindrical),
    CorpusCase("four-dim-hyperbolic", False, _four_dim),
    CorpusCase("two-dim-hyperbolic", False, _two_dim),
)


def corpus_case(name: str) -> CorpusCase:
    for case in CORPUS:
        if case.name == name:
            return case
    raise KeyError(name)
