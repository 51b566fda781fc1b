"""Command line front-end: ``greenbvp {build,verify,sweep,eig,h-op}``.

Exit codes: 0 success, 1 verification failure, 2 invalid or unsolvable
problem, 3 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, config
from .green import GreenFunction, SingularProblemError, boundary_residuals, check_solvability, jump
from .linking import (IDENTITIES, LinkingError, off_diagonal_grid, reports_to_csv, reports_to_json,
                      residual_report)
from .ode import IntegrationError, fundamental_system
from .problem import SpecError
from .quadrature import QuadratureRule
from .recurrence import RecurrenceHypothesisError, H_residual, build_H

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PROBLEM = 2
EXIT_CONFIG = 3

log = logging.getLogger("greenbvp")


class ProblemError(Exception):
    """Invalid or unsolvable problem; maps to exit code 2."""


def _r(x) -> str:
    x = float(x)
    return repr(x) if np.isfinite(x) else "nan"


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _kernel(spec, tol) -> GreenFunction:
    try:
        fs = fundamental_system(spec, tol)
    except IntegrationError as exc:
        raise ProblemError(str(exc)) from None
    cert = check_solvability(spec, fs)
    if not cert.unique_solvable:
        raise ProblemError(f"M={spec.M!r} is an eigenvalue: the problem is not uniquely solvable "
                           f"(|det|={abs(cert.determinant):.3e})")
    return GreenFunction(spec, fs)


# Subcommands ---------------------------------------------------------------

def cmd_build(cfg: dict, out: Path, svg: bool = False) -> int:
    spec = config.problem_from_config(cfg)
    opts = cfg["build"]
    ls = sorted(set(opts["l"]))
    if any(l > spec.n for l in ls):
        raise ProblemError(f"derivative orders must lie in 0..{spec.n}")
    g = _kernel(spec, cfg["tol"])
    a, b = spec.interval
    grid = np.linspace(a, b, opts["grid"])
    ss = np.linspace(a, b, opts["jump_samples"] + 2)[1:-1]
    jumps = jump(g, ss)
    bres = boundary_residuals(g, ss)
    classes = {}
    rows = []
    T, S = np.meshgrid(grid, grid, indexing="ij")
    for l in ls:
        if l <= spec.n - 1:
            classes[str(l)] = analysis.classify_samples(analysis.kernel_samples(g, l, grid))
        vals = g.derivatives(T, S, l, side="left")[..., l]
        rows.extend((_r(t), _r(s), l, _r(v)) for t, s, v in zip(T.ravel(), S.ravel(), vals.ravel()))
    witness = analysis.strong_sign_witness(g)
    cert = g.certificate
    summary = {
        "problem": spec.to_json(),
        "solvable": True,
        "determinant": cert.determinant,
        "threshold": cert.threshold,
        "condition": cert.condition,
        "jump_max_error": float(np.max(np.abs(jumps - 1.0))),
        "boundary_max_residual": float(np.max(np.abs(bres))),
        "classification": classes,
        "witness": None if witness is None else {"sign": witness.sign, "margin": witness.margin},
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "s", "l", "value"))
    w.writerows(rows)
    _write(out, "kernel_samples.csv", buf.getvalue())
    _write(out, "build.json", _dumps(summary))
    if svg:
        from .plots import kernel_svg
        _write(out, "kernel.svg", kernel_svg(g))
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


def cmd_verify(cfg: dict, out: Path) -> int:
    opts = cfg["verify"]
    if "M0" not in opts or "M1" not in opts:
        raise config.ConfigError("verify needs M0 and M1")
    spec = config.problem_from_config(cfg)
    k0 = opts.get("k0", spec.k)
    k1 = opts.get("k1", spec.k)
    if k0 != k1:
        raise ProblemError(f"usage error: both kernels must share k (got {k0} and {k1})")
    from dataclasses import replace
    spec = replace(spec, k=k0)
    ls = sorted(set(opts["l"]))
    if any(l > spec.n - 1 for l in ls):
        raise ProblemError(f"l values must lie in 0..{spec.n - 1}")
    g0 = _kernel(spec.with_M(opts["M0"]), cfg["tol"])
    g1 = _kernel(spec.with_M(opts["M1"]), cfg["tol"])
    quad = QuadratureRule(panels=cfg["quadrature"]["panels"], nodes=cfg["quadrature"]["nodes"])
    t, s = off_diagonal_grid(spec.a, spec.b, opts["grid"])
    grid = {"count": opts["grid"], "layout": "staggered"}
    jobs = []
    for ident in IDENTITIES:
        if ident in ("dlink-1", "dlink-2", "cross"):
            jobs.extend((ident, l) for l in ls)
        else:
            jobs.append((ident, None))

    def run(job):
        return residual_report(job[0], g0, g1, t, s, quad, job[1], grid)

    with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
        reports = list(pool.map(run, jobs))
    bound = opts["bound"]
    _write(out, "residuals.csv", reports_to_csv(reports))
    _write(out, "residuals.json", reports_to_json(reports) + "\n")
    failed = [r for r in reports if not r.passed(bound)]
    for r in reports:
        sys.stdout.write(f"{r.identity:<16} max={r.max_abs:.3e} {'ok' if r.passed(bound) else 'FAIL'}\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _sweep_grid(opts):
    if "M" in opts:
        return np.asarray(opts["M"], dtype=float)
    if "M_range" not in opts:
        raise config.ConfigError("sweep needs M or M_range")
    lo, hi = opts["M_range"]
    return np.linspace(lo, hi, opts["M_points"])


def cmd_sweep(cfg: dict, out: Path, svg: bool) -> int:
    opts = cfg["sweep"]
    spec = config.problem_from_config(cfg)
    M = _sweep_grid(opts)
    if len(M) == 0:
        raise ProblemError("usage error: empty M grid")
    ls = sorted(set(opts["l"]))
    if any(l > spec.n - 1 for l in ls):
        raise ProblemError(f"l values must lie in 0..{spec.n - 1}")
    ts = analysis.sign_grid(spec.a, spec.b, opts["grid"])
    rep = analysis.sweep(spec, M, ls, ts, tol=cfg["tol"], refine_tol=opts["refine_tol"],
                         threads=cfg["threads"])
    _write(out, "sweep.json", rep.dumps() + "\n")
    _write(out, "sweep.csv", rep.to_csv())
    if svg:
        from .plots import sweep_svg
        _write(out, "sweep.svg", sweep_svg(rep))
    summary = {
        "eigenvalues": rep.eigenvalues,
        "intervals": {str(l): {c: [iv.to_json() for iv in runs] for c, runs in d.items()}
                      for l, d in rep.intervals.items()},
        "endpoint_gap": rep.endpoint_gap,
    }
    sys.stdout.write(_dumps(summary))
    return EXIT_OK


def cmd_eig(cfg: dict, out: Path, svg: bool) -> int:
    opts = cfg["eig"]
    if "bracket" not in opts:
        raise config.ConfigError("eig needs a bracket")
    spec = config.problem_from_config(cfg)
    scan = analysis.find_eigenvalues(spec, opts["bracket"], max_count=opts["max_count"],
                                     scan_points=opts["scan_points"], tol=cfg["tol"])
    doc = {"bracket": list(map(float, opts["bracket"])), "eigenvalues": scan.values,
           "brackets": [list(b) for b in scan.brackets], "truncated": scan.truncated, "k": spec.k}
    _write(out, "eig.json", _dumps(doc))
    if svg:
        from .plots import determinant_svg
        _write(out, "determinant.svg", determinant_svg(spec, opts["bracket"], scan.values, cfg["tol"]))
    sys.stdout.write(_dumps(doc))
    return EXIT_OK


def cmd_h_op(cfg: dict, out: Path) -> int:
    opts = cfg["h_op"]
    if "l" not in opts:
        raise config.ConfigError("h_op needs l")
    spec = config.problem_from_config(cfg)
    try:
        H = build_H(spec, opts["l"], opts["m_position"])
    except RecurrenceHypothesisError as exc:
        raise ProblemError(str(exc)) from None
    except ValueError as exc:
        raise ProblemError(str(exc)) from None
    ts = np.linspace(spec.a, spec.b, opts["samples"])
    vals = H.evaluate(ts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t",) + tuple(f"b_{j}" for j in range(spec.n + 1)))
    w.writerows((_r(t),) + tuple(_r(v) for v in row) for t, row in zip(ts, vals))
    doc = {"operator": str(H), "branches": list(H.branches), "l": H.l,
           "m_position": opts["m_position"]}
    if "s" in opts:
        s = float(opts["s"])
        if not spec.a < s < spec.b:
            raise ProblemError("s must lie inside the interval")
        g = _kernel(spec, cfg["tol"])
        inner = ts[(ts != s)]
        doc["max_residual"] = float(np.max(np.abs(H_residual(H, g, H.l, inner, s))))
        doc["s"] = s
    _write(out, "h_op.csv", buf.getvalue())
    _write(out, "h_op.json", _dumps(doc))
    sys.stdout.write(_dumps(doc))
    return EXIT_OK


# Entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greenbvp", description="Green's functions of linear BVPs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("build", "verify", "sweep", "eig", "h-op"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--tol", type=float, help="integration tolerance")
        p.add_argument("--threads", type=int, help="worker threads")
        p.add_argument("--svg", action="store_true", help="write SVG plots (build, sweep, eig)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config.load(args.config)
        if args.tol is not None:
            if not args.tol > 0:
                raise config.ConfigError("--tol must be positive")
            cfg["tol"] = args.tol
        if args.threads is not None:
            if args.threads < 1:
                raise config.ConfigError("--threads must be >= 1")
            cfg["threads"] = args.threads
        out = Path(args.out or cfg["output"]["dir"])
        svg = args.svg or cfg["output"]["svg"]
        if args.command == "build":
            return cmd_build(cfg, out, svg)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, svg)
        if args.command == "eig":
            return cmd_eig(cfg, out, svg)
        return cmd_h_op(cfg, out)
    except config.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ProblemError, SpecError, SingularProblemError, LinkingError) as exc:
        print(f"problem error: {exc}", file=sys.stderr)
        return EXIT_PROBLEM


if __name__ == "__main__":
    sys.exit(main())
