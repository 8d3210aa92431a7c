"""Command line front end.

Exit codes: 0 success, 2 tolerance not reached (or budget exhausted),
3 invalid input, 4 numerical failure. Outputs go to ``--outdir``, else to
``$MAZECAP_OUTDIR``, else to the current directory. Every run writes a
``manifest.json`` next to its outputs; timings live only there so the
other files are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .conformal import diagnostics_json, triangle_map_table
from .fem import BudgetExhausted, CapacityResult, SolverError, capacity, defeature_study, loglog_slope
from .geometry import FAMILIES, CondenserSpec, GeometryError, build, validate_spec
from .mesh import MeshError
from .metrics import QH_FAMILIES, qh_annulus_closed, qh_circular_closed, qh_square_closed, reports_to_csv
from .svgplot import LogLogPlot

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3, 4
OUTDIR_ENV = "MAZECAP_OUTDIR"
DEFAULT_PARAMS = {
    "square_maze": [7, 9, 11, 14],
    "circular_maze": [5, 7, 10, 12, 15],
    "spiked_annulus": [10, 16, 20],
}
QH_CLOSED = {
    "square_maze": qh_square_closed,
    "circular_maze": qh_circular_closed,
    "spiked_annulus": qh_annulus_closed,
}

log = logging.getLogger("mazecap")


class InputError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    params: dict
    version: str = __version__
    deterministic: bool = True
    outputs: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def write(self, outdir: Path) -> Path:
        path = outdir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")
        return path


# ---------------------------------------------------------------------------
# helpers


def _family(name: str) -> str:
    fam = name.replace("-", "_")
    if fam not in FAMILIES and fam != "annulus":
        raise InputError(f"unknown family {name!r}")
    return fam


def _param_key(fam: str) -> str:
    return "M" if fam == "spiked_annulus" else "n" if fam == "tangent_disks" else "m"


def parse_int_list(text: str) -> list[int]:
    """``"7,9,11"`` or a range ``"7..14"``."""
    text = text.strip()
    if not text:
        raise InputError("empty parameter list")
    if ".." in text:
        lo, hi = text.split("..")
        vals = list(range(int(lo), int(hi) + 1))
    else:
        vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise InputError("empty parameter range")
    return vals


def parse_float_list(text: str) -> list[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise InputError("empty list")
    return vals


def _outdir(args) -> Path:
    d = Path(args.outdir or os.environ.get(OUTDIR_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(outdir: Path, name: str, text: str, manifest: RunManifest) -> Path:
    p = outdir / name
    p.write_text(text)
    manifest.outputs.append(name)
    return p


def _check_family_params(fam: str, p: dict) -> None:
    if fam in ("square_maze", "circular_maze") and p.get("m") is not None and p["m"] < 3:
        raise InputError("m must be >= 3")
    if fam == "spiked_annulus" and p.get("M") is not None and (p["M"] < 6 or p["M"] % 2):
        raise InputError("M must be even and >= 6")
    if fam == "tangent_disks" and p.get("n") is not None and p["n"] < 3:
        raise InputError("n must be >= 3")


def capacity_opts(args) -> dict:
    return dict(
        order=args.order,
        levels=args.levels,
        target_rel_err=args.target,
        max_area=args.max_area,
        grading_q=args.q,
        grading_levels=args.grading_levels,
        solver=args.solver,
    )


CAPACITY_CSV_HEADER = ["family", "param", "qh_length", "qh_perimeter", "capacity", "est_rel_error",
                       "error_exponent", "dofs", "converged"]


def capacity_csv_row(res: CapacityResult) -> list:
    fam = res.params.get("family", "")
    key = _param_key(fam) if fam in FAMILIES else None
    param = res.params.get(key, "") if key else ""
    qh = QH_CLOSED.get(fam)
    L = qh(int(param)) if qh and param != "" else None
    return [
        fam,
        param,
        "" if L is None else repr(L),
        "" if L is None else repr(2 * L),
        repr(res.value),
        repr(res.est_rel_error),
        res.error_exponent,
        res.dofs,
        res.converged,
    ]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _result_json(res: CapacityResult) -> str:
    d = res.to_dict()
    d.pop("timings")
    return json.dumps(d, indent=1, sort_keys=True) + "\n"


def _capacity_task(payload):
    fam, params, opts = payload
    spec = build(fam, **params)
    return capacity(spec, **opts)


def _map(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_capacity_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_capacity_task, tasks))  # map keeps input order


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args, manifest: RunManifest) -> int:
    fam = _family(args.family)
    params = {k: getattr(args, k) for k in ("m", "M", "n", "rho", "cut_radius", "cut_mode", "r0", "r1", "l0", "l1")}
    params = {k: v for k, v in params.items() if v is not None}
    _check_family_params(fam, params)
    key = _param_key(fam)
    if fam != "annulus" and key not in params:
        raise InputError(f"{args.family} needs --{key}")
    manifest.params = {"family": fam, **params}
    spec = build(fam, **params)
    diag = validate_spec(spec)
    outdir = _outdir(args)
    name = args.output or (f"{fam}_{key}{params[key]}.json" if key in params else f"{fam}.json")
    _write(outdir, name, spec.to_json(), manifest)
    print(json.dumps({"spec": name, **diag.to_dict()}, indent=1, sort_keys=True))
    return EXIT_OK if diag.valid else EXIT_INPUT


def cmd_qh(args, manifest: RunManifest) -> int:
    fam = _family(args.family)
    if fam not in QH_FAMILIES:
        raise InputError(f"no quasihyperbolic estimate for {fam}")
    vals = parse_int_list(args.params) if args.params is not None else DEFAULT_PARAMS[fam]
    for v in vals:
        _check_family_params(fam, {_param_key(fam): v})
    manifest.params = {"family": fam, "params": vals, "numeric": not args.no_numeric}
    reports = [QH_FAMILIES[fam](v, numeric=not args.no_numeric) for v in vals]
    text = reports_to_csv(reports)
    outdir = _outdir(args)
    _write(outdir, args.output or f"qh_{fam}.csv", text, manifest)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_capacity(args, manifest: RunManifest) -> int:
    try:
        spec = CondenserSpec.from_json(Path(args.spec).read_text())
    except OSError as exc:
        raise InputError(f"cannot read spec: {exc}") from exc
    diag = validate_spec(spec)
    if not diag.valid:
        raise InputError("invalid spec: " + "; ".join(diag.violations))
    opts = capacity_opts(args)
    manifest.params = {"spec": str(args.spec), **opts}
    res = capacity(spec, **opts)
    manifest.timings = res.timings
    outdir = _outdir(args)
    stem = args.output or Path(args.spec).stem + "_capacity"
    _write(outdir, stem + ".json", _result_json(res), manifest)
    _write(outdir, stem + ".csv", _csv(CAPACITY_CSV_HEADER, [capacity_csv_row(res)]), manifest)
    print(f"capacity {res.value!r} est_rel_error {res.est_rel_error:.3e} dofs {res.dofs}")
    if res.budget_exhausted:
        print("level budget exhausted before the target tolerance", file=sys.stderr)
    return EXIT_OK if res.converged else EXIT_TOLERANCE


def cmd_study(args, manifest: RunManifest) -> int:
    outdir = _outdir(args)
    opts = capacity_opts(args)
    if args.study == "rates":
        return _study_rates(args, opts, outdir, manifest)
    if args.study == "qh-error":
        return _study_rates(args, opts, outdir, manifest, qh_error=True)
    return _study_defeature(args, opts, outdir, manifest)


def _study_rates(args, opts, outdir, manifest, qh_error: bool = False) -> int:
    fam = _family(args.family or "circular_maze")
    if fam not in DEFAULT_PARAMS:
        raise InputError(f"no rate study for {fam}")
    vals = sorted(parse_int_list(args.params)) if args.params is not None else DEFAULT_PARAMS[fam]
    if len(vals) < 3:
        raise InputError("a rate fit needs at least 3 parameter values")
    key = _param_key(fam)
    for v in vals:
        _check_family_params(fam, {key: v})
    manifest.params = {"study": args.study, "family": fam, "params": vals, **opts}
    results = _map([(fam, {key: v}, opts) for v in vals], args.jobs)
    caps = [r.value for r in results]
    scale = [1.0 / (2 * v) for v in vals]
    perims = [2.0 * QH_CLOSED[fam](v) for v in vals]
    errs = [abs(c - p) / c for c, p in zip(caps, perims)]
    slope = loglog_slope(scale, caps)
    err_slope = loglog_slope(scale, errs)
    rows = [[v, repr(s), repr(c), repr(p), repr(e), repr(r.est_rel_error)]
            for v, s, c, p, e, r in zip(vals, scale, caps, perims, errs, results)]
    stem = f"{args.study}_{fam}"
    _write(outdir, stem + ".csv",
           _csv([key, "scale", "capacity", "qh_perimeter", "perimeter_rel_error", "est_rel_error"], rows), manifest)
    fit = {"family": fam, "params": vals, "slope": slope, "rate": -slope,
           "perimeter_error_slope": err_slope, "converged": all(r.converged for r in results)}
    _write(outdir, stem + "_fit.json", json.dumps(fit, indent=1, sort_keys=True) + "\n", manifest)
    plot = LogLogPlot(title=f"{fam.replace('_', ' ')}", xlabel=f"1/(2{key})")
    if qh_error:
        plot.ylabel = "|cap - QH perimeter| / cap"
        plot.add(scale, errs, "relative error")
    else:
        plot.ylabel = "capacity"
        plot.add(scale, caps, "capacity")
    _write(outdir, stem + ".svg", plot.render(), manifest)
    manifest.timings = {str(v): r.timings for v, r in zip(vals, results)}
    shown = err_slope if qh_error else slope
    print(f"slope {shown!r}")
    return EXIT_OK if fit["converged"] else EXIT_TOLERANCE


def _study_defeature(args, opts, outdir, manifest) -> int:
    n = args.n or 6
    cuts = parse_float_list(args.cuts) if args.cuts else None
    if cuts is None:
        raise InputError("--cuts is required for the defeature study")
    manifest.params = {"study": "defeature", "n": n, "rho": args.rho, "cuts": cuts, "cut_mode": args.cut_mode, **opts}
    rows = defeature_study(n, args.rho, cuts, cut_mode=args.cut_mode, **opts)
    _write(outdir, "defeature.csv",
           _csv(["s", "capacity", "reduction", "est_rel_error"],
                [[repr(r.s), repr(r.capacity), repr(r.reduction), repr(r.est_rel_error)] for r in rows]),
           manifest)
    pos = [(r.s, r.reduction) for r in rows if r.s > 0 and r.reduction > 0]
    fit: dict = {"n": n, "rho": args.rho, "cut_mode": args.cut_mode,
                 "max_reduction": max(r.reduction for r in rows)}
    if len(pos) >= 3:
        fit["slope"] = loglog_slope([p[0] for p in pos], [p[1] for p in pos])
    else:
        fit["slope"] = None
        fit["reason"] = "fewer than 3 positive reductions; fit refused"
        print(fit["reason"], file=sys.stderr)
    _write(outdir, "defeature_fit.json", json.dumps(fit, indent=1, sort_keys=True) + "\n", manifest)
    if pos:
        plot = LogLogPlot(title="capacity loss from cusp cuts", xlabel="cut radius s", ylabel="relative reduction")
        plot.add([p[0] for p in pos], [p[1] for p in pos], "reduction", fit=len(pos) >= 3)
        _write(outdir, "defeature.svg", plot.render(), manifest)
    return EXIT_OK


def cmd_map_triangle(args, manifest: RunManifest) -> int:
    if not 0 < args.theta <= math.pi / 6 + 1e-15:
        raise InputError("theta must lie in (0, pi/6]")
    if args.samples < 3:
        raise InputError("need at least 3 samples per side")
    manifest.params = {"theta": args.theta, "samples": args.samples}
    table, diag = triangle_map_table(args.theta, args.samples)
    outdir = _outdir(args)
    stem = args.output or "triangle_map"
    _write(outdir, stem + ".csv", table, manifest)
    _write(outdir, stem + "_diagnostics.json", diagnostics_json(diag) + "\n", manifest)
    print(f"max deviation {diag['max_deviation']:.3e}")
    return EXIT_OK if diag["max_deviation"] <= 1e-10 else EXIT_TOLERANCE


# ---------------------------------------------------------------------------


def _add_capacity_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--order", type=int, default=2, choices=(1, 2))
    p.add_argument("--levels", type=int, default=3, help="nested refinement levels (solves)")
    p.add_argument("--target", type=float, default=1e-4, help="target relative error")
    p.add_argument("--max-area", type=float, default=None, help="initial triangle area bound")
    p.add_argument("--q", type=float, default=0.15, help="corner grading ratio")
    p.add_argument("--grading-levels", type=int, default=6)
    p.add_argument("--solver", default="auto", choices=("auto", "direct", "cg"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mazecap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--outdir", default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a condenser spec file")
    g.add_argument("family")
    g.add_argument("--m", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--rho", type=float)
    g.add_argument("--cut-radius", type=float)
    g.add_argument("--cut-mode", choices=("centered", "outward"))
    for k in ("r0", "r1", "l0", "l1"):
        g.add_argument(f"--{k}", type=float)
    g.add_argument("-o", "--output", help="file name inside the output directory")

    q = sub.add_parser("qh", help="quasihyperbolic length and perimeter table")
    q.add_argument("family")
    q.add_argument("--params", help="e.g. 7,9,11 or 7..14")
    q.add_argument("--no-numeric", action="store_true", help="skip the numeric line integral")
    q.add_argument("-o", "--output")

    c = sub.add_parser("capacity", help="capacity of a spec file")
    c.add_argument("spec")
    _add_capacity_flags(c)
    c.add_argument("-o", "--output", help="output file stem")

    s = sub.add_parser("study", help="rate fits, QH error and defeaturing studies")
    s.add_argument("study", choices=("rates", "qh-error", "defeature"))
    s.add_argument("family", nargs="?")
    s.add_argument("--params")
    s.add_argument("--n", type=int)
    s.add_argument("--rho", type=float)
    s.add_argument("--cuts", help="comma separated cut radii")
    s.add_argument("--cut-mode", default="centered", choices=("centered", "outward"))
    s.add_argument("--jobs", type=int, default=1)
    _add_capacity_flags(s)

    t = sub.add_parser("map-triangle", help="sample the arc-triangle conformal map")
    t.add_argument("--theta", type=float, default=math.pi / 6)
    t.add_argument("--samples", type=int, default=100)
    t.add_argument("-o", "--output")
    return ap


COMMANDS = {
    "generate": cmd_generate,
    "qh": cmd_qh,
    "capacity": cmd_capacity,
    "study": cmd_study,
    "map-triangle": cmd_map_triangle,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    manifest = RunManifest(command=args.command, argv=argv, params={})
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, manifest)
    except (InputError, GeometryError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExhausted as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except MeshError as exc:
        print(f"error: mesh failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, FloatingPointError, ValueError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    manifest.timings = {"total": time.perf_counter() - t0, "phases": manifest.timings}
    manifest.write(_outdir(args))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
