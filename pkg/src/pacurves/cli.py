"""Command-line front end (``pa-curves``).

Exit status: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 failed verification. All outputs are deterministic.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import __version__
from .curve import ArcLengthCurve, arclength_reparametrize
from .errors import PACurvesError, UsageError
from .expr import sample
from .golden import FIXTURE_IDS, run_all
from .manifold import MODEL_KINDS, FieldAlongCurve, model_from_spec
from .numerics import DEFAULT_STEP, Grid, Series, differentiate_series
from .pa_analysis import DEFAULT_TOL, analyze
from .pa_synthesis import load_presets, synthesize_from_params, validate_params
from .properties import run_consistency_suite, run_transport_suite
from .transport import TorseFormingLaw, estimate_law, transport_field

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Serialization


def _clean(obj):
    """JSON-ready copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def write_json(path: Path, report: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"
    path.write_text(text)


def write_csv(path: Path, columns: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in data:
            w.writerow([format(v, ".17g") for v in row])


def _coord_columns(prefix, s, arr):
    cols = {"s": s}
    for i in range(arr.shape[1]):
        cols[f"{prefix}{i + 1}"] = arr[:, i]
    return cols


def read_csv(path, prefix: str, width: int):
    """Read ``s, <prefix>1..<prefix>width``; returns (s, values)."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"input file {path} does not exist")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    want = ["s"] + [f"{prefix}{i + 1}" for i in range(width)]
    if header != want:
        raise UsageError(f"{path}: header must be {','.join(want)}, got {','.join(header)}")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 5:
        raise UsageError(f"{path}: need at least 5 data rows")
    return data[:, 0], data[:, 1:]


# ---------------------------------------------------------------------------
# Argument helpers


def parse_span(text):
    if text is None:
        return None
    try:
        a, b = (float(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--span must look like a:b, got {text!r}") from None
    if not a < b:
        raise UsageError("--span needs a < b")
    return a, b


def _positive(name, value):
    if value is not None and not value > 0:
        raise UsageError(f"{name} must be positive")
    return value


def _load_curve(model, path, span=None, reparametrize=False) -> ArcLengthCurve:
    s, pts = read_csv(path, "x", model.coord_dim)
    grid = Grid(s)
    if reparametrize:
        curve = arclength_reparametrize(model, grid, pts)
    else:
        vel = differentiate_series(Series(grid, pts), 6).values
        if model.embedded:
            vel = model.tangent_project(pts, vel)
        curve = ArcLengthCurve(model, grid, pts, vel)
    if span is not None:
        mask = (curve.s >= span[0] - 1e-12) & (curve.s <= span[1] + 1e-12)
        if np.count_nonzero(mask) < 5:
            raise UsageError("--span leaves fewer than 5 curve samples")
        curve = curve.restrict(mask)
    return curve


def _load_field(model, curve, path, interpolate) -> FieldAlongCurve:
    s, vec = read_csv(path, "v", model.coord_dim)
    same = len(s) == len(curve.s) and np.array_equal(s, curve.s)
    if not same:
        inside = (s[0] <= curve.s[0]) and (s[-1] >= curve.s[-1])
        if not interpolate:
            raise UsageError("field and curve grids differ; pass --interpolate to resample")
        if not inside:
            raise UsageError("field samples do not cover the curve's parameter range")
        vec = CubicSpline(s, vec, axis=0)(curve.s)
    if model.embedded:
        vec = model.tangent_project(curve.points, vec)
    return FieldAlongCurve(curve, vec)


# ---------------------------------------------------------------------------
# Commands


def cmd_golden(args, out: Path) -> int:
    ids = FIXTURE_IDS if args.id.lower() == "all" else [args.id.upper()]
    tol = {"default": args.tol} if args.tol is not None else None
    reports = run_all(ids, tol, args.step)
    for rep in reports:
        write_json(out / f"golden_{rep['fixture']}.json", rep)
        n_bad = sum(not q["pass"] for q in rep["quantities"])
        print(f"{rep['fixture']}: {rep['verdict']} ({len(rep['quantities'])} quantities, "
              f"{n_bad} failing)")
    return EXIT_OK if all(r["verdict"] == "pass" for r in reports) else EXIT_VERIFY


def cmd_analyze(args, out: Path) -> int:
    model = model_from_spec(args.model)
    if args.reparametrize and args.field:
        raise UsageError("--reparametrize cannot be combined with a field file")
    curve = _load_curve(model, args.curve, parse_span(args.span), args.reparametrize)
    fld = _load_field(model, curve, args.field, args.interpolate) if args.field else None
    rep = analyze(model, curve, fld, tol=args.tol if args.tol is not None else DEFAULT_TOL)
    report = {
        "command": "analyze",
        "inputs": {"model": model.describe(), "curve": Path(args.curve).name,
                   "field": Path(args.field).name if args.field else None,
                   "span": [float(curve.s[0]), float(curve.s[-1])], "nodes": len(curve)},
        "quantities": rep.quantities,
        "info": rep.info,
        "verdict": rep.verdict,
    }
    write_json(out / "analyze_report.json", report)
    write_csv(out / "analyze_profiles.csv", rep.profiles)
    print(f"analyze: {rep.verdict}")
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_transport(args, out: Path) -> int:
    model = model_from_spec(args.model)
    curve = _load_curve(model, args.curve, parse_span(args.span))
    f = sample(args.f, curve.grid)
    if args.law == "anti-torqued":
        law = TorseFormingLaw.anti_torqued(f)
    elif args.law == "concircular":
        law = TorseFormingLaw.concircular(f)
    else:
        if args.omega is None:
            raise UsageError("--law generic needs --omega")
        law = TorseFormingLaw(f, sample(args.omega, curve.grid))
    try:
        v0 = np.array([float(x) for x in args.v0.split(",")])
    except ValueError:
        raise UsageError(f"--v0 must be comma-separated numbers, got {args.v0!r}") from None
    fld = transport_field(model, curve, law, v0)
    est = estimate_law(model, curve, fld)
    expected_w = law.omega_values(model, curve, fld.vectors)
    from .properties import _quantity

    tol = args.tol if args.tol is not None else DEFAULT_TOL
    quantities = [
        _quantity("law_residual", est.residual.values, 1e-6),
        _quantity("law_recovery_f", est.law.f.values - f.values, tol),
        _quantity("law_recovery_omega", est.law.omega.values - expected_w, tol),
    ]
    report = {
        "command": "transport",
        "inputs": {"model": model.describe(), "curve": Path(args.curve).name, "law": args.law,
                   "f": args.f, "omega": args.omega, "v0": v0.tolist(), "nodes": len(curve)},
        "quantities": quantities,
        "info": {"law_class": est.law.kind},
        "verdict": "pass" if all(q["pass"] for q in quantities) else "fail",
    }
    write_csv(out / "field.csv", _coord_columns("v", curve.s, fld.vectors))
    write_json(out / "transport_report.json", report)
    print(f"transport: {report['verdict']}")
    return EXIT_OK if report["verdict"] == "pass" else EXIT_VERIFY


def cmd_synthesize(args, out: Path) -> int:
    presets = load_presets()
    if args.list_presets:
        for name, p in presets.items():
            print(f"{name:24s} {p['kind']:10s} {p['model']:18s} {p.get('description', '')}")
        return EXIT_OK
    if (args.params is None) == (args.preset is None):
        raise UsageError("synthesize needs exactly one of --params FILE or --preset NAME")
    if args.preset is not None:
        if args.preset not in presets:
            raise UsageError(f"unknown preset {args.preset!r}; see --list-presets")
        params = dict(presets[args.preset])
    else:
        path = Path(args.params)
        if not path.is_file():
            raise UsageError(f"parameter file {path} does not exist")
        try:
            params = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    if args.model:
        params["model"] = args.model
    span = parse_span(args.span)
    if span:
        params["span"] = list(span)
    params = validate_params(params)
    res = synthesize_from_params(params, _positive("--step", args.step))
    curve = res.curve
    audit = getattr(curve, "audit", None)
    info = {}
    if audit is not None:
        info.update(max_gram_defect=audit.max_gram_defect,
                    max_constraint_drift=audit.max_constraint_drift)
    if "sphere_center" in res.extras:
        info["sphere_center"] = res.extras["sphere_center"]
    if "lancret" in res.extras:
        info["lancret_r0"] = res.extras["lancret"].r0
    report = {
        "command": "synthesize",
        "inputs": {k: v for k, v in params.items() if k != "description"} |
                  {"nodes": len(curve)},
        "quantities": res.quantities,
        "info": info,
        "verdict": "pass" if res.passed else "fail",
    }
    profiles = {"s": curve.s}
    for i, k in enumerate(res.profile.curvatures):
        profiles["kappa" if i == 0 else "tau"] = k.values
    profiles["f"] = res.law.f.values
    write_csv(out / "synth_curve.csv", _coord_columns("x", curve.s, curve.points))
    write_csv(out / "synth_field.csv", _coord_columns("v", curve.s, res.field.vectors))
    write_csv(out / "synth_profiles.csv", profiles)
    write_json(out / "synthesize_report.json", report)
    print(f"synthesize: {report['verdict']}")
    return EXIT_OK if res.passed else EXIT_VERIFY


def cmd_property(args, out: Path) -> int:
    step = args.step or DEFAULT_STEP
    tr = run_transport_suite(args.seed, args.instances, step)
    cs = run_consistency_suite(args.seed, args.instances, step)
    quantities = [dict(q, name=f"transport:{q['name']}") for q in tr["quantities"]] + \
        [dict(q, name=f"consistency:{q['name']}") for q in cs["quantities"]]
    report = {
        "command": "property",
        "inputs": {"seed": args.seed, "instances": args.instances, "step": step,
                   "models": tr["models"]},
        "quantities": quantities,
        "verdict": "pass" if tr["verdict"] == cs["verdict"] == "pass" else "fail",
    }
    write_json(out / "property_report.json", report)
    print(f"property (seed {args.seed}): {report['verdict']}")
    return EXIT_OK if report["verdict"] == "pass" else EXIT_VERIFY


def cmd_list_models(args, out) -> int:
    for line in MODEL_KINDS.values():
        print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="pa_curves_out", help="output directory")
    common.add_argument("--tol", type=float, help="tolerance for checks without a pinned one "
                        f"(default {DEFAULT_TOL:g})")
    common.add_argument("--step", type=float, help=f"grid step (default {DEFAULT_STEP:g})")
    common.add_argument("--span", help="parameter interval a:b")

    p = argparse.ArgumentParser(prog="pa-curves", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("golden", parents=[common], help="run closed-form fixtures")
    g.add_argument("id", nargs="?", default="all", help="G1..G6 or all")
    g.set_defaults(func=cmd_golden)

    a = sub.add_parser("analyze", parents=[common], help="analyse a curve and optional field")
    a.add_argument("curve", help="CSV with columns s,x1..xk")
    a.add_argument("field", nargs="?", help="CSV with columns s,v1..vk")
    a.add_argument("--model", default="euclidean:3")
    a.add_argument("--interpolate", action="store_true",
                   help="resample the field onto the curve grid")
    a.add_argument("--reparametrize", action="store_true",
                   help="treat the first column as a raw parameter and resample by arc length")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("transport", parents=[common], help="integrate a torse-forming law")
    t.add_argument("curve")
    t.add_argument("--model", default="euclidean:3")
    t.add_argument("--f", required=True, help="potential as an expression in s")
    t.add_argument("--law", choices=["anti-torqued", "concircular", "generic"],
                   default="anti-torqued")
    t.add_argument("--omega", help="omega(T) as an expression in s (generic law)")
    t.add_argument("--v0", required=True, help="initial vector, comma separated")
    t.set_defaults(func=cmd_transport)

    s = sub.add_parser("synthesize", parents=[common], help="build a PA curve from data")
    s.add_argument("--params", help="JSON parameter file")
    s.add_argument("--preset", help="name of a shipped parameter set")
    s.add_argument("--list-presets", action="store_true")
    s.add_argument("--model", help="override the parameter set's model")
    s.set_defaults(func=cmd_synthesize)

    r = sub.add_parser("property", parents=[common], help="randomized property suites")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--instances", type=int, default=100)
    r.set_defaults(func=cmd_property)

    m = sub.add_parser("list-models", help="list model specifications")
    m.set_defaults(func=cmd_list_models, out=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    out = Path(args.out) if getattr(args, "out", None) else None
    try:
        _positive("--step", getattr(args, "step", None))
        _positive("--tol", getattr(args, "tol", None))
        return args.func(args, out)
    except PACurvesError as exc:
        print(f"pa-curves: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
