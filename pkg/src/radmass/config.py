"""Run configuration: a sectioned ``key = value`` file read with configparser.

Sections and keys::

    [run]         dimension = 2 | 3 | 4, endpoint = a | b (asymptotics)
    [grid]        a, b, nr, inset
    [chart]       kind = periodic-box | latlong-sphere, resolutions, ghat, periods
    [background]  preset = hyperbolic | euclidean | cylindrical | spherical | custom,
                  k (hyperbolic), expr (custom)
    [metric]      exactly one of: builtin | matrix | perturbation (+ profile) | h
                  (n = 2 only; optional h0 and delta = h - h0)
    [params]      named numbers usable in every expression
    [output]      dir

Values may be wrapped in double quotes.  Every expression is parsed when
the file is loaded.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import LATLONG_SPHERE, PERIODIC_BOX, build_chart, build_radial_grid
from .expr import ExprSyntaxError, parse_expression, parse_matrix
from .metric import (
    BUILTINS,
    MetricError,
    eval_metric_family,
    family_from_h,
    h_field,
    make_background,
    make_perturbed_family,
    parse_call,
)

METRIC_KINDS = ("builtin", "matrix", "perturbation", "h")


class ConfigError(Exception):
    """Invalid configuration; the CLI exits with status 2."""


@dataclass
class RunConfig:
    path: Path
    sha256: str
    dimension: int
    grid: dict
    chart: dict
    background: dict
    metric: dict
    params: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @property
    def metric_kind(self) -> str:
        return next(k for k in METRIC_KINDS if k in self.metric)


@dataclass
class Setup:
    """Sampled objects for one resolution."""

    grid: object
    chart: object
    background: object
    family: object = None
    h: np.ndarray | None = None
    h0: np.ndarray | None = None
    delta: np.ndarray | None = None


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _locate(text: str, section: str, key: str) -> tuple[int, int]:
    """(line, column of the value start) of ``key`` in ``section``, 1-based."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        head = re.match(r"\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            continue
        if current == section:
            m = re.match(r"\s*([^=:\s]+)\s*[=:]\s*", line)
            if m and m.group(1).lower() == key:
                col = m.end() + 1
                rest = line[m.end():]
                if rest[:1] in "\"'":
                    col += 1
                return lineno, col
    return 0, 0


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, text: str, path: Path):
        self.parser, self.text, self.path = parser, text, path

    def get(self, section, key, default=None, required=False):
        if self.parser.has_option(section, key):
            return _unquote(self.parser.get(section, key))
        if required:
            raise ConfigError(f"{self.path}: missing key '{key}' in [{section}]")
        return default

    def number(self, section, key, default=None, kind=float):
        raw = self.get(section, key, default=None, required=default is None)
        if raw is None:
            return default
        try:
            value = kind(raw)
        except ValueError:
            line, col = _locate(self.text, section, key)
            raise ConfigError(f"{self.path}:{line}:{col}: [{section}] {key} = {raw!r} is not a {kind.__name__}") from None
        return value

    def expression(self, section, key, text):
        try:
            parse_expression(text)
        except ExprSyntaxError as exc:
            self._syntax(section, key, text, exc)

    def matrix(self, section, key, text):
        try:
            parse_matrix(text)
        except ExprSyntaxError as exc:
            self._syntax(section, key, text, exc)
        except ValueError as exc:
            line, col = _locate(self.text, section, key)
            raise ConfigError(f"{self.path}:{line}:{col}: [{section}] {key}: {exc}") from None

    def _syntax(self, section, key, text, exc):
        line, col = _locate(self.text, section, key)
        # matrix errors carry the offset inside one entry; report the first failing one
        offset = exc.position
        if exc.text and exc.text != text:
            offset += max(text.find(exc.text), 0)
        raise ConfigError(
            f"{self.path}:{line}:{col + offset}: cannot parse [{section}] {key} = {text!r}: {exc}"
        ) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    text = raw.decode("utf-8", errors="replace")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"{where}: {exc.message if hasattr(exc, 'message') else exc}".splitlines()[0]) from None
    rd = _Reader(parser, text, path)

    n = rd.number("run", "dimension", kind=int)
    if n not in (2, 3, 4):
        raise ConfigError(f"{path}: dimension must be 2, 3 or 4, got {n}")

    params = {}
    if parser.has_section("params"):
        for key in parser.options("params"):
            params[key] = rd.number("params", key)

    grid = {
        "a": rd.number("grid", "a"),
        "b": rd.number("grid", "b"),
        "nr": rd.number("grid", "nr", kind=int),
        "inset": rd.number("grid", "inset", 0.0),
    }

    kind = rd.get("chart", "kind", PERIODIC_BOX)
    res_text = rd.get("chart", "resolutions", required=True)
    try:
        resolutions = tuple(int(v) for v in re.split(r"[,\s]+", res_text.strip()) if v)
    except ValueError:
        line, col = _locate(text, "chart", "resolutions")
        raise ConfigError(f"{path}:{line}:{col}: resolutions must be integers, got {res_text!r}") from None
    ghat = rd.get("chart", "ghat", "round" if kind == LATLONG_SPHERE else "flat")
    chart_dim = 2 if kind == LATLONG_SPHERE else len(resolutions)
    if kind == PERIODIC_BOX and len(resolutions) == 1:
        chart_dim = n - 1
    if chart_dim != n - 1:
        raise ConfigError(
            f"{path}: dimension mismatch: n = {n} needs a {n - 1}-dimensional chart, "
            f"[chart] describes a {chart_dim}-dimensional one"
        )
    if ghat not in ("flat", "round", "round-sphere"):
        rd.matrix("chart", "ghat", ghat)
    periods = rd.get("chart", "periods")
    chart = {
        "kind": kind,
        "dim": chart_dim,
        "resolutions": resolutions,
        "ghat": ghat,
        "periods": tuple(float(v) for v in periods.split(",")) if periods else None,
    }

    preset = rd.get("background", "preset", required=True)
    background = {"preset": preset}
    name = preset.split("(")[0].strip()
    if name == "hyperbolic" and "(" not in preset:
        background["k"] = rd.number("background", "k", 0.0)
    if name == "custom" and "(" not in preset:
        expr = rd.get("background", "expr", required=True)
        rd.expression("background", "expr", expr)
        background["expr"] = expr
    elif name == "custom":
        rd.expression("background", "preset", parse_call(preset)[1][0])

    metric = {}
    present = [k for k in METRIC_KINDS if parser.has_option("metric", k)]
    if len(present) != 1:
        raise ConfigError(f"{path}: [metric] needs exactly one of {', '.join(METRIC_KINDS)}; found {present or 'none'}")
    mkind = present[0]
    value = rd.get("metric", mkind)
    if mkind == "builtin":
        try:
            bname, args = parse_call(value)
        except MetricError as exc:
            raise ConfigError(f"{path}: [metric] builtin: {exc}") from None
        if bname not in BUILTINS:
            raise ConfigError(f"{path}: unknown builtin {bname!r}; expected one of {', '.join(BUILTINS)}")
        for arg in args:
            rd.expression("metric", "builtin", arg)
    elif mkind == "matrix":
        rd.matrix("metric", "matrix", value)
        size = len(parse_matrix(value))
        if size != n - 1:
            raise ConfigError(f"{path}: dimension mismatch: [metric] matrix is {size}x{size}, n = {n} needs {n - 1}x{n - 1}")
    elif mkind == "perturbation":
        if value.strip().lower() != "ghat":
            rd.matrix("metric", "perturbation", value)
            size = len(parse_matrix(value))
            if size != n - 1:
                raise ConfigError(f"{path}: dimension mismatch: perturbation is {size}x{size}, n = {n} needs {n - 1}x{n - 1}")
        metric["profile"] = rd.get("metric", "profile", "1")
        rd.expression("metric", "profile", metric["profile"])
    else:
        if n != 2:
            raise ConfigError(f"{path}: dimension mismatch: [metric] h describes a 2-dimensional metric, n = {n}")
        rd.expression("metric", "h", value)
        for extra in ("h0", "delta"):
            if parser.has_option("metric", extra):
                metric[extra] = rd.get("metric", extra)
                rd.expression("metric", extra, metric[extra])
    metric[mkind] = value

    run = {"endpoint": rd.get("run", "endpoint", "b")}
    output = {"dir": rd.get("output", "dir")}
    return RunConfig(
        path=path,
        sha256=hashlib.sha256(raw).hexdigest(),
        dimension=n,
        grid=grid,
        chart=chart,
        background=background,
        metric=metric,
        params=params,
        run=run,
        output=output,
    )


def build_setup(cfg: RunConfig, refine: int = 1) -> Setup:
    """Sample grid, chart, background and metric at ``refine`` times the configured resolution."""
    if refine < 1:
        raise ConfigError("refinement factor must be >= 1")
    g = cfg.grid
    try:
        grid = build_radial_grid(g["a"], g["b"], (g["nr"] - 1) * refine + 1, g["inset"])
        c = cfg.chart
        chart = build_chart(
            c["kind"],
            c["dim"],
            tuple(r * refine for r in c["resolutions"]),
            c["ghat"],
            periods=c["periods"],
            params=cfg.params,
        )
        bgc = dict(cfg.background)
        preset = bgc.pop("preset")
        if "expr" in bgc:
            preset = f"custom({bgc.pop('expr')})"
        bg = make_background(preset, grid, chart, values=cfg.params, **bgc)
        m = cfg.metric
        kind = cfg.metric_kind
        setup = Setup(grid, chart, bg)
        if kind == "h":
            h = h_field(m["h"], grid, chart, cfg.params)
            if "h0" in m:
                h0 = h_field(m["h0"], grid, chart, cfg.params)
            else:
                h0 = np.array(np.broadcast_to(bg.h.reshape((-1,) + (1,) * chart.dim), h.shape))
            setup.h, setup.h0 = h, h0
            if "delta" in m:
                setup.delta = h_field(m["delta"], grid, chart, cfg.params)
            if "h0" not in m:
                setup.family = family_from_h(h, grid, chart, background=bg)
        elif kind == "perturbation":
            setup.family = make_perturbed_family(bg, m["perturbation"], m["profile"], params=cfg.params)
        else:
            spec = m.get("builtin") or m.get("matrix")
            setup.family = eval_metric_family(spec, grid, chart, params=cfg.params, background=bg)
            if cfg.dimension == 2:
                setup.h = np.sqrt(setup.family.G[..., 0, 0] / chart.ghat[..., 0, 0])
                setup.h0 = np.array(np.broadcast_to(bg.h.reshape((-1,) + (1,) * chart.dim), setup.h.shape))
    except ConfigError:
        raise
    except (ValueError, ArithmeticError) as exc:
        raise ConfigError(f"{cfg.path}: {exc}") from None
    if not math.isfinite(grid.dr):
        raise ConfigError(f"{cfg.path}: invalid grid")
    return setup
