"""Command-line front end.

Exit codes: 0 when every checked property holds, 1 on a property violation,
2 on bad input (unreadable or malformed files, invalid parameters).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covering import CoverInstance, czd_cover
from .errors import BadParams, WeakLinfError, WrongSpaceShape
from .io import (
    csv_text,
    dumps,
    function_to_dict,
    load_function,
    load_space,
    read_json,
    space_to_dict,
    write_text,
)
from .metric_measure import (
    Ball,
    counterexample_function,
    doubling_constant,
    dyadic_counterexample_space,
    log_example_space,
    random_function,
    random_space,
)
from .oscillation import (
    counterexample_oscillation,
    enlarged_ball_bmto_constant,
    enlarged_ball_bound,
    local_linf_constant,
    oscillation_report,
)
from .rearrangement import (
    StepFunction,
    decreasing_rearrangement,
    distribution_function,
    sample_points,
)
from .verify import DEFAULT_COUNTS, TOL_CONST, TOL_EXACT, run_covering_suite, run_suites
from .weak_linf import constant_report

# the doubling constant and per-ball sweeps are quadratic in the atom count
DOUBLING_LIMIT = 2000
BALL_SWEEP_LIMIT = 256


def _clean(obj):
    """Replace non-finite floats by ``None`` so reports stay valid JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _doubling(space):
    return doubling_constant(space) if space.n <= DOUBLING_LIMIT else None


def _header(args, command, space=None, c_mu=None):
    head = {
        "tool": "weaklinf",
        "version": __version__,
        "command": command,
        "seed": getattr(args, "seed", None),
        "tolerances": {"exact": args.tol_exact, "const": args.tol_const},
        "rho": args.rho,
    }
    if space is not None:
        head["atoms"] = space.n
        head["doubling_constant"] = c_mu if c_mu is not None else _doubling(space)
    return head


def _emit(args, name, text):
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_text(Path(args.out) / name, text)


def _need(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise BadParams(f"--{name.replace('_', '-')} is required")


def _load(args):
    _need(args, "space", "function")
    space = load_space(args.space)
    return space, load_function(args.function, space)


def _is_counterexample(f):
    try:
        counterexample_function(f.space)
    except WrongSpaceShape:
        return False
    return True


# -- commands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.out is None:
        raise BadParams("--out directory is required for gen")
    if args.kind == "dyadic":
        _need(args, "K")
        space = dyadic_counterexample_space(args.K)
        f = counterexample_function(space)
    elif args.kind == "log-example":
        space, f = log_example_space(args.n or 1, args.m or 1000)
    else:
        rng = np.random.default_rng(args.seed)
        space = random_space(rng, args.n or 32, args.dim, args.masses)
        f = random_function(rng, space, args.template)
    write_text(Path(args.out) / "space.json", dumps(space_to_dict(space)))
    write_text(Path(args.out) / "function.json", dumps(function_to_dict(f)))
    sys.stdout.write(dumps({"atoms": space.n, "total_mass": space.total_mass, "out": str(args.out)}))
    return 0


def _constants_rows(d: StepFunction):
    rows = []
    for lam in sample_points(d).tolist():
        dl = d(lam)
        tail = d.tail(lam)
        rows.append((lam, dl, tail, tail / dl if dl > 0 else ""))
    return rows


def analysis_dict(args, space, f) -> dict:
    c_mu = _doubling(space)
    rep = constant_report(f, args.alpha)
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    out = {
        "header": _header(args, "analyze", space, c_mu),
        "constants": rep.to_dict(),
        "levels": np.unique(np.abs(f.values)).tolist(),
        "distribution": d.to_dict(),
        "rearrangement": fs.to_dict(),
        "oscillation": None,
    }
    if _is_counterexample(f):
        K = space.n - 1
        out["oscillation"] = {
            "kind": "counterexample",
            "rows": [[k, counterexample_oscillation(K, k)] for k in range((K - 1) // 2 + 1)],
        }
    elif space.n <= BALL_SWEEP_LIMIT:
        rows = oscillation_report(f).rows
        out["oscillation"] = {"kind": "balls", "rows": [[k, r.oscillation] for k, r in enumerate(rows)]}
    return _clean(out)


def cmd_analyze(args) -> int:
    space, f = _load(args)
    report = analysis_dict(args, space, f)
    d = distribution_function(f)
    _emit(args, "analysis.json", dumps(report))
    if args.out is not None:
        _emit(args, "constants.csv", csv_text(("lambda", "d", "tail", "ratio"), _constants_rows(d)))
    return 0


def cmd_bmo_report(args) -> int:
    space, f = _load(args)
    c_mu = _doubling(space)
    rep = oscillation_report(f)
    body = rep.to_dict()
    body["local_linf_constant"] = local_linf_constant(f)
    body["enlarged_ball_constant"] = enlarged_ball_bmto_constant(f, args.rho)
    body["explicit_bound"] = enlarged_ball_bound(c_mu, rep.bmo_norm) if c_mu is not None else None
    _emit(args, "bmo_report.json", dumps(_clean({"header": _header(args, "bmo-report", space, c_mu), "report": body})))
    if args.out is not None:
        rows = [(r.center, r.radius, r.size, r.mass, r.mean, r.oscillation) for r in rep.rows]
        _emit(args, "balls.csv", csv_text(("center", "radius", "size", "mass", "mean", "oscillation"), rows))
    return 0


def _parse_ball(text):
    try:
        c, r = text.split(",")
        return Ball(int(c), float(r))
    except ValueError as exc:
        raise BadParams(f"--ball expects 'center,radius', got {text!r} ({exc})") from None


def _load_ids(path):
    data = read_json(path)
    if isinstance(data, dict):
        data = data.get("F")
    if not isinstance(data, list):
        raise BadParams("F file must hold a list of atom ids or {\"F\": [...]}")
    try:
        return frozenset(int(a) for a in data)
    except (TypeError, ValueError):
        raise BadParams("F ids must be integers") from None


def cmd_cover(args) -> int:
    if args.action == "verify":
        count = DEFAULT_COUNTS["covering"] if args.instances is None else args.instances
        report = run_covering_suite(args.seed, count)
        _emit(args, "cover_verify.json", dumps(report))
        return 0 if report["summary"]["passed"] else 1
    _need(args, "space", "ball", "F")
    space = load_space(args.space)
    ball = _parse_ball(args.ball)
    space.index(ball.center)
    inst = CoverInstance(space, ball, _load_ids(args.F))
    c_mu = doubling_constant(space)
    result = czd_cover(inst, c_mu)
    body = {"header": _header(args, "cover", space, c_mu), "cover": result.to_dict()}
    _emit(args, "cover.json", dumps(_clean(body)))
    props = result.to_dict()["properties"]
    return 0 if all(props.values()) else 1


def cmd_counterexample(args) -> int:
    K = 40 if args.K is None else args.K
    rows = [(k, counterexample_oscillation(K, k)) for k in range((K - 1) // 2 + 1)]
    _emit(args, "counterexample.csv", csv_text(("k", "oscillation"), rows))
    return 0


def cmd_verify(args) -> int:
    counts = None if args.instances is None else {k: args.instances for k in DEFAULT_COUNTS}
    extra = None
    if args.space is not None or args.function is not None:
        extra = _load(args)[1]
    report = run_suites(args.seed, counts, args.tol_exact, args.tol_const, args.rho, extra)
    report["header"]["rho"] = args.rho
    text = dumps(_clean(report))
    _emit(args, "verify.json", text)
    s = report["summary"]
    line = f"verify: {s['checks']} checks, {s['failed']} failed\n"
    if args.out is not None:
        sys.stdout.write(line)
        for name, suite in report["suites"].items():
            for fail in suite["failures"]:
                sys.stdout.write(f"  {name}: {dumps(_clean(fail))}")
    else:
        sys.stderr.write(line)
    return 0 if s["passed"] else 1


def plot_rows(analysis: dict):
    """CSV tables from an analysis report: distribution, rearrangement, oscillation."""
    try:
        d = StepFunction.from_dict(analysis["distribution"])
        fs = StepFunction.from_dict(analysis["rearrangement"])
        levels = [float(x) for x in analysis["levels"]]
        osc = analysis.get("oscillation")
    except (KeyError, TypeError) as exc:
        raise BadParams(f"malformed analysis file: {exc}") from None
    dist = [(lam, d(lam)) for lam in levels]
    t = fs.breakpoints
    rear = []
    for ti in t.tolist():
        star = fs(ti)
        avg = fs.cumulative(ti) / ti
        rear.append((ti, star, avg, avg - star))
    osc_rows = [] if osc is None else [(int(k), float(v)) for k, v in osc["rows"]]
    return dist, rear, osc_rows


def cmd_plot_data(args) -> int:
    _need(args, "analysis", "out")
    dist, rear, osc = plot_rows(read_json(args.analysis))
    _emit(args, "distribution.csv", csv_text(("lambda", "d"), dist))
    _emit(args, "rearrangement.csv", csv_text(("t", "f_star", "f_star_star", "difference"), rear))
    _emit(args, "oscillation.csv", csv_text(("k", "oscillation"), osc))
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space")
    common.add_argument("--function")
    common.add_argument("--K", type=int)
    common.add_argument("--rho", type=float, default=3.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--instances", type=int)
    common.add_argument("--out")
    common.add_argument("--tol-exact", type=float, default=TOL_EXACT)
    common.add_argument("--tol-const", type=float, default=TOL_CONST)

    p = argparse.ArgumentParser(prog="weaklinf", description="Weak-L-infinity and BMO on finite metric measure spaces.")
    p.add_argument("--version", action="version", version=f"weaklinf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a space and a function")
    g.add_argument("kind", choices=("dyadic", "log-example", "random"))
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--dim", type=int, default=1)
    g.add_argument("--masses", choices=("unit", "dyadic"), default="unit")
    g.add_argument("--template", choices=("gaussian", "gaussian-ties", "log"), default="gaussian")
    g.set_defaults(run=cmd_gen)

    a = sub.add_parser("analyze", parents=[common], help="optimal weak-L-infinity constants")
    a.add_argument("--alpha", type=float, default=0.0)
    a.set_defaults(run=cmd_analyze)

    b = sub.add_parser("bmo-report", parents=[common], help="BMO and tail-oscillation constants")
    b.set_defaults(run=cmd_bmo_report)

    c = sub.add_parser("cover", parents=[common], help="ball covering of a set F")
    c.add_argument("action", nargs="?", choices=("verify",))
    c.add_argument("--ball")
    c.add_argument("--F")
    c.set_defaults(run=cmd_cover)

    x = sub.add_parser("counterexample", parents=[common], help="oscillation of the dyadic counterexample")
    x.set_defaults(run=cmd_counterexample)

    v = sub.add_parser("verify", parents=[common], help="randomized property suites")
    v.set_defaults(run=cmd_verify)

    q = sub.add_parser("plot-data", parents=[common], help="CSV tables from an analysis report")
    q.add_argument("--analysis")
    q.set_defaults(run=cmd_plot_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        sys.stderr.write("weaklinf: --seed must be an unsigned 64-bit integer\n")
        return 2
    if args.instances is not None and args.instances < 0:
        sys.stderr.write("weaklinf: --instances must be nonnegative\n")
        return 2
    try:
        return args.run(args)
    except (WeakLinfError, OSError) as exc:
        sys.stderr.write(f"weaklinf: {type(exc).__name__}: {exc}\n")
        return 2
