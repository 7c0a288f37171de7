"""Command-line front end.

Every subcommand reads a configuration file, writes ``<command>.csv`` into
the output directory and exits with 0 (all checks passed), 1 (a checked
identity or inequality failed) or 2 (bad input).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import run_all
from .asymptotics import DivergenceError, ProvenanceError, estimator_base, estimator_infinity, extrapolate_limit
from .chart import PERIODIC_BOX, integrate_N
from .compare import ch_flux, hawking_mass, hawking_vs_radial
from .config import ConfigError, RunConfig, build_setup, load_config
from .curvature import shape_bundle
from .mass import (
    mass_2d,
    radial_mass,
    riccati_residual_2d,
    riccati_residual_nd,
    second_order,
)
from .metric import MetricError, natural_interval
from .rigidity import MODEL_RRR0, curvature_pair, model_preset_suite, theorem_report, theorem_report_2d

COMMANDS = (
    "eval-mass",
    "verify-riccati",
    "check-theorem",
    "models",
    "asymptotics",
    "compare-hawking",
    "compare-ch",
    "selftest",
)


class InputError(Exception):
    pass


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header, rows, footer: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
        for line in footer:
            fh.write(f"# {line}\n")


def _sup(values) -> np.ndarray:
    values = np.abs(np.asarray(values))
    return values.reshape(values.shape[0], -1).max(axis=1)


def _is_2d(cfg: RunConfig) -> bool:
    return cfg.dimension == 2


def cmd_eval_mass(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    if _is_2d(cfg):
        m = mass_2d(s.h, s.h0, s.grid)
        M = np.atleast_1d(integrate_N(m, s.chart))
        s2 = np.zeros(s.grid.nr)
    else:
        bundle = shape_bundle(s.family)
        mf = radial_mass(bundle, s.background)
        m, M, s2 = mf.m, mf.M, _sup(bundle.s2)
    rows = zip(s.grid.r, M, _sup(m), s2 if np.ndim(s2) == 1 else _sup(s2))
    return ["r", "M", "sup_abs_m", "sup_s2"], list(rows), [], 0


def _residual(cfg, s, source):
    if _is_2d(cfg):
        return riccati_residual_2d(s.h, s.h0, s.grid, s.chart)
    bundle = shape_bundle(s.family)
    rrr, rrr0 = curvature_pair(s.family, s.background, source, bundle)
    return riccati_residual_nd(radial_mass(bundle, s.background), bundle, s.background, rrr, rrr0)


def cmd_verify_riccati(cfg, args):
    if args.rrr_source == "oracle" and cfg.chart["kind"] != PERIODIC_BOX:
        raise InputError("--rrr-source oracle needs a periodic-box chart")
    factor = args.refine or 2
    if factor < 2:
        raise InputError("verify-riccati needs --refine >= 2")
    base = build_setup(cfg, 1)
    coarse = _residual(cfg, base, args.rrr_source)
    fine = _residual(cfg, build_setup(cfg, factor), args.rrr_source)
    l1 = np.atleast_1d(integrate_N(np.abs(coarse.field), base.chart))
    rows = list(zip(base.grid.r, _sup(coarse.field), l1))
    expected = factor**2
    band = (expected * 3.5 / 4, expected * 4.5 / 4)
    ok = second_order(coarse, fine, band=band)
    ratio = coarse.sup / fine.sup if fine.sup else math.inf
    footer = [
        f"sup-coarse: {fmt(coarse.sup)}",
        f"sup-fine: {fmt(fine.sup)}",
        f"convergence-ratio: {fmt(ratio)}",
        f"second-order: {fmt(ok)}",
    ]
    return ["r", "residual_sup", "residual_L1"], rows, footer, 0 if ok else 1


THEOREM_HEADER = [
    "lhs",
    "rhs",
    "defect",
    "identity_gap",
    "inequality_holds",
    "is_warped_product",
    "equals_background",
    "asymptotic_at",
]


def _theorem_row(rep):
    return [rep.lhs, rep.rhs, rep.defect, rep.identity_gap, rep.inequality_holds,
            rep.is_warped_product, rep.equals_background, rep.asymptotic_at or "none"]


def cmd_check_theorem(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    if _is_2d(cfg) and s.family is None:
        rep = theorem_report_2d(s.h, s.h0, s.grid, s.chart)
    else:
        if args.rrr_source == "oracle" and cfg.chart["kind"] != PERIODIC_BOX:
            raise InputError("--rrr-source oracle needs a periodic-box chart")
        rep = theorem_report(s.family, s.background, args.rrr_source, asymptotic_tol=args.tol)
    return THEOREM_HEADER, [_theorem_row(rep)], [], 0 if rep.inequality_holds else 1


def cmd_models(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    if s.family is None:
        raise InputError("models needs a metric family; a 2D h0 override is not supported")
    rows, failed = [], False
    k = cfg.background.get("k", 0.0)
    for model in MODEL_RRR0:
        lo, hi = natural_interval(model, k if model == "hyperbolic" else 0.0)
        if not (lo < s.grid.start and s.grid.stop < hi):
            continue
        params = {"k": k} if model == "hyperbolic" else {}
        rep = model_preset_suite(model, s.family, args.rrr_source, **params)
        failed |= not rep.report.inequality_holds
        rows.append([rep.background.tag, rep.rrr0_constant, rep.rrr0_max_error] + _theorem_row(rep.report))
    if not rows:
        raise InputError("the grid lies inside none of the model intervals")
    header = ["model", "rrr0_constant", "rrr0_max_error"] + THEOREM_HEADER
    return header, rows, [], 1 if failed else 0


def cmd_asymptotics(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    endpoint = cfg.run.get("endpoint", "b")
    if endpoint not in ("a", "b"):
        raise InputError("[run] endpoint must be 'a' or 'b'")
    if _is_2d(cfg) and s.family is None:
        M = np.atleast_1d(integrate_N(mass_2d(s.h, s.h0, s.grid), s.chart))
    else:
        M = radial_mass(shape_bundle(s.family), s.background).M
    try:
        lo, hi = natural_interval(s.background.preset, s.background.params.get("k", 0.0))
    except MetricError:
        lo, hi = -math.inf, math.inf
    target = lo if endpoint == "a" else hi
    ext = extrapolate_limit(s.grid.r, M, target)

    kind, value, agree = "none", math.nan, None
    if s.family is not None and s.family.perturbation is not None:
        try:
            est = estimator_infinity(s.family, s.background, endpoint)
        except DivergenceError:
            est = estimator_base(s.family, s.background, endpoint)
        except ProvenanceError:
            est = None
        if est is not None:
            kind, value = est.kind, est.value
            tol = args.tol if args.tol is not None else 1e-3
            if ext.converged:
                agree = abs(value - ext.value) <= tol
    header = ["endpoint", "estimator_kind", "estimator", "extrapolated", "rate", "fit_residual",
              "drift", "converged", "agree"]
    row = [endpoint, kind, value, ext.value, ext.rate or "none", ext.residual, ext.drift,
           ext.converged, "n/a" if agree is None else agree]
    return header, [row], [], 1 if agree is False else 0


def cmd_compare_hawking(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    if cfg.dimension != 3:
        raise InputError("compare-hawking needs dimension = 3")
    if s.background.preset != "euclidean":
        raise InputError("compare-hawking needs the euclidean background")
    table = hawking_vs_radial(s.family, s.background)
    hs = hawking_mass(s.family)
    rows = [[r, M, mh, ratio, m_h, A] for (r, M, mh, ratio), m_h, A in zip(table.rows(), hs.m_H, hs.A)]
    ext = extrapolate_limit(s.grid.r, table.M, math.inf)
    footer = [f"M-extrapolation-converged: {fmt(ext.converged)}"]
    return ["r", "M", "eight_pi_m_H", "ratio", "m_H", "area"], rows, footer, 0


def cmd_compare_ch(cfg, args):
    s = build_setup(cfg, args.refine or 1)
    if cfg.dimension != 2:
        raise InputError("compare-ch needs dimension = 2")
    if "h0" in cfg.metric:
        raise InputError("compare-ch uses the hyperbolic background as h0; remove [metric] h0")
    flux = ch_flux(s.h, s.background, delta=s.delta)
    rows = zip(s.grid.r, flux.p, flux.M, flux.ratio, _sup(flux.Ur))
    return ["r", "p", "M", "p_over_M", "sup_abs_Ur"], list(rows), [], 0


def cmd_selftest(args):
    results = run_all()
    for res in results:
        print(res.line())
    rows = [[r.number, r.title, r.passed, r.detail] for r in results]
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    if args.out:
        write_csv(Path(args.out) / "selftest.csv", ["criterion", "title", "passed", "detail"], rows, [])
    return 0 if ok else 1


HANDLERS = {
    "eval-mass": cmd_eval_mass,
    "verify-riccati": cmd_verify_riccati,
    "check-theorem": cmd_check_theorem,
    "models": cmd_models,
    "asymptotics": cmd_asymptotics,
    "compare-hawking": cmd_compare_hawking,
    "compare-ch": cmd_compare_ch,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radmass", description="Relative radial mass of radial-gauge metrics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "selftest", help="run configuration file")
        p.add_argument("--out", help="output directory (default: [output] dir, else the current directory)")
        p.add_argument("--refine", type=int, help="grid refinement factor (verify-riccati: fine/coarse, default 2)")
        p.add_argument("--rrr-source", choices=("radial", "oracle"), default="radial")
        p.add_argument("--tol", type=float, help="tolerance override for verdicts")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.refine is not None and args.refine < 1:
        print("error: --refine must be >= 1", file=sys.stderr)
        return 2
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = load_config(args.config)
        header, rows, footer, code = HANDLERS[args.command](cfg, args)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg.output.get("dir") or ".")
    target = out / f"{args.command}.csv"
    write_csv(target, header, rows, footer + [f"config-sha256: {cfg.sha256}"])
    status = "ok" if code == 0 else "check failed"
    print(f"{args.command}: {status}; wrote {target}")
    return code


if __name__ == "__main__":
    sys.exit(main())
