"""Command-line front end.

Subcommands: ``analyze``, ``scan``, ``fibers``, ``simulate``, ``models`` and
``verify``. JSON output carries ``"schema": "contact-kit/1"``; CSV output has
a header row and 17 significant digits per float.

Exit codes: 0 success, 1 usage error, 2 numerical failure. Options can also
be read from a ``key=value`` file given with ``--config``; flags on the
command line take precedence.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import sys
from pathlib import Path

import numpy as np

from . import classifier as cl
from . import derivatives as dv
from .errors import ContactKitError, ParameterError, UnknownModelError
from .geomflow import (ContinuationConfig, IntegratorConfig, continue_contact_curve, fiber_family,
                       find_contact_point, integrate_full)
from .models import (MITOTIC_FACES, load_model, load_model_file, model_names, parameter_specs)
from .serialize import (branch_rows, diagnostics_to_dict, dump_json, fmt, grid_header, grid_row,
                        trajectory_rows, write_csv)
from .tensorkit import RankTolerance

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as comma-separated numbers") from None
    if not np.all(np.isfinite(v)):
        raise UsageError(f"non-finite coordinate in {text!r}")
    return v


def parse_axis(text: str) -> np.ndarray:
    """``min:max:count`` -> ``count`` evenly spaced values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid axis must be min:max:count, got {text!r}")
    try:
        lo, hi, cnt = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"cannot parse grid axis {text!r}") from None
    if cnt < 1:
        raise UsageError("grid counts must be at least 1")
    return np.linspace(lo, hi, cnt)


def parse_params(items) -> dict[str, float]:
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise UsageError(f"parameter override must be name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"parameter {name} has non-numeric value {value!r}") from None
    return out


def read_config(path: str) -> list[str]:
    """Turn ``key=value`` lines into ``--key value`` tokens; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    tokens = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line {raw!r} is not key=value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            tokens.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            tokens.append(f"{flag}={value}")
    return tokens


def _model_options(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", help="zoo model name, e.g. three_component or ac_family(3)")
    g.add_argument("--model-file", help="JSON model definition")
    g.add_argument("--face", choices=MITOTIC_FACES, help="face-local factorization (mitotic)")
    g.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="parameter override")


def _tol_options(p):
    g = p.add_argument_group("tolerances")
    g.add_argument("--zero-abs", type=float, default=1e-8)
    g.add_argument("--zero-rel", type=float, default=1e-6)
    g.add_argument("--manifold-dist", type=float, default=1e-9)
    g.add_argument("--rank-abs", type=float, default=1e-10)
    g.add_argument("--rank-rel", type=float, default=1e-8)
    g.add_argument("--max-order", type=int, default=4)


def _output_options(p, default_format):
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=default_format)


def _integrator_options(p, t_span):
    p.add_argument("--t-span", default=t_span, help="t0,t1")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--atol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="contactkit", description="Contact-point analysis of factorized slow-fast systems.")
    parser.add_argument("--config", help="key=value file with default options")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="classify one point")
    _model_options(p)
    p.add_argument("--point", required=True, help="comma-separated coordinates")
    p.add_argument("--project", action="store_true", help="project the point onto f = 0 first")
    _tol_options(p)
    _output_options(p, "json")

    p = sub.add_parser("scan", help="classify a grid, or continue a contact curve")
    _model_options(p)
    p.add_argument("--grid", action="append", default=[], metavar="MIN:MAX:COUNT", help="one per axis")
    p.add_argument("--project", action="store_true", help="project grid points onto f = 0 first")
    p.add_argument("--branch", action="store_true", help="continue the contact curve through --seed")
    p.add_argument("--seed", help="seed point for the contact search in branch mode")
    p.add_argument("--fix", action="append", default=[], metavar="INDEX=VALUE",
                   help="pin a coordinate while searching for the branch start")
    p.add_argument("--max-points", type=int, default=2000)
    _tol_options(p)
    _output_options(p, "csv")

    p = sub.add_parser("fibers", help="trajectories of the desingularized layer flow")
    _model_options(p)
    p.add_argument("--seeds", help="semicolon-separated points")
    p.add_argument("--seed-grid", action="append", default=[], metavar="MIN:MAX:COUNT")
    _integrator_options(p, "-2,2")
    _output_options(p, "csv")

    p = sub.add_parser("simulate", help="integrate the full system")
    _model_options(p)
    p.add_argument("--z0", required=True)
    p.add_argument("--eps", type=float, help="override the singular perturbation parameter")
    _integrator_options(p, "0,100")
    _output_options(p, "csv")

    p = sub.add_parser("models", help="list zoo models")
    _output_options(p, "json")

    p = sub.add_parser("verify", help="cross-check derivatives and reproduce known answers")
    _model_options(p)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--random-seed", type=int, default=0)
    _tol_options(p)
    _output_options(p, "json")
    return parser


def _with_config(argv: list[str]) -> list[str]:
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    tokens = read_config(known.config)
    # subcommand first, then config defaults, then explicit flags (later wins)
    for i, tok in enumerate(rest):
        if not tok.startswith("-"):
            return rest[: i + 1] + tokens + rest[i + 1:]
    return tokens + rest


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _model(args):
    overrides = parse_params(args.param)
    if args.model_file:
        if args.model:
            raise UsageError("give either --model or --model-file")
        return load_model_file(args.model_file, overrides)
    if not args.model:
        raise UsageError("--model or --model-file is required")
    face = args.face
    if face is None and args.model == "mitotic":
        face = "X=0"
    return load_model(args.model, overrides, face=face)


def _tol(args) -> cl.Tolerances:
    try:
        return cl.Tolerances(zero_abs=args.zero_abs, zero_rel=args.zero_rel, manifold_dist=args.manifold_dist,
                             rank=RankTolerance(args.rank_abs, args.rank_rel), max_order=args.max_order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _dim_check(model, v, what):
    if v.size != model.n:
        raise UsageError(f"{what} has {v.size} coordinates, model {model.name} has n = {model.n}")
    return v


def _span(text):
    v = parse_vector(text)
    if v.size != 2:
        raise UsageError("--t-span must be t0,t1")
    return float(v[0]), float(v[1])


def _icfg(args):
    try:
        return IntegratorConfig(rtol=args.rtol, atol=args.atol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_analyze(args, out):
    model = _model(args)
    tol = _tol(args)
    z = _dim_check(model, parse_vector(args.point), "--point")
    diag = cl.classify(model, z, tol, project=args.project)
    rec = diagnostics_to_dict(diag, model, tol)
    if args.format == "csv":
        write_csv(grid_header(model.variables), [grid_row(0, diag)], out)
    else:
        dump_json(rec, out)


def cmd_scan(args, out):
    model = _model(args)
    tol = _tol(args)
    if args.branch:
        if not args.seed:
            raise UsageError("branch mode needs --seed")
        seed = _dim_check(model, parse_vector(args.seed), "--seed")
        fixed = {}
        for item in args.fix:
            idx, sep, val = item.partition("=")
            try:
                fixed[int(idx)] = float(val)
            except ValueError:
                raise UsageError(f"--fix must be INDEX=VALUE, got {item!r}") from None
        z0 = find_contact_point(model, seed, fixed=fixed)
        branch = continue_contact_curve(model, z0, ContinuationConfig(max_points=args.max_points), tol=tol)
        header, rows = branch_rows(branch, model.variables)
        if args.format == "json":
            dump_json({"model": model.name, "parameters": dict(model.params), "termination": branch.termination,
                       "columns": header, "rows": rows}, out)
        else:
            write_csv(header, rows, out)
        return
    if len(args.grid) != model.n:
        raise UsageError(f"grid mode needs one --grid per axis ({model.n})")
    axes = [parse_axis(a) for a in args.grid]
    mesh = np.array(np.meshgrid(*axes, indexing="ij")).reshape(model.n, -1).T
    diags = [cl.classify(model, z, tol, project=args.project) for z in mesh]
    if args.format == "json":
        dump_json({"model": model.name, "parameters": dict(model.params),
                   "points": [diagnostics_to_dict(d, model, tol) for d in diags]}, out)
    else:
        write_csv(grid_header(model.variables), [grid_row(i, d) for i, d in enumerate(diags)], out)


def cmd_fibers(args, out):
    model = _model(args)
    if args.seeds:
        seeds = [_dim_check(model, parse_vector(s), "seed") for s in args.seeds.split(";") if s.strip()]
    elif args.seed_grid:
        if len(args.seed_grid) != model.n:
            raise UsageError(f"--seed-grid needs one axis per coordinate ({model.n})")
        axes = [parse_axis(a) for a in args.seed_grid]
        seeds = list(np.array(np.meshgrid(*axes, indexing="ij")).reshape(model.n, -1).T)
    else:
        raise UsageError("fibers needs --seeds or --seed-grid")
    trajs = fiber_family(model, seeds, _span(args.t_span), _icfg(args))
    header, rows = trajectory_rows(trajs, model.variables)
    if args.format == "json":
        dump_json({"model": model.name, "columns": header, "rows": rows}, out)
    else:
        write_csv(header, rows, out)


def cmd_simulate(args, out):
    model = _model(args)
    z0 = _dim_check(model, parse_vector(args.z0), "--z0")
    if args.eps is not None and args.eps < 0:
        raise UsageError("--eps must be non-negative")
    tr = integrate_full(model, z0, _span(args.t_span), _icfg(args), eps=args.eps)
    header, rows = trajectory_rows([tr], model.variables, with_id=False)
    if args.format == "json":
        dump_json({"model": model.name, "parameters": dict(model.params),
                   "eps": model.eps if args.eps is None else args.eps, "stats": tr.stats,
                   "events": [{"kind": e.kind, "t": e.t, "z": e.z} for e in tr.events],
                   "columns": header, "rows": rows}, out)
    else:
        write_csv(header, rows, out)


def _models_listing():
    out = []
    for name in model_names():
        specs = parameter_specs(name)
        faces = MITOTIC_FACES if name == "mitotic" else (None,)
        entry = {
            "name": name,
            "parameters": {k: {"default": s.default, "constraint": s.constraint(k), "description": s.description}
                           for k, s in specs.items()},
            "faces": [f for f in faces if f is not None],
            "variants": [],
        }
        for face in faces:
            m = load_model(name, face=face)
            entry["variants"].append({
                "face": face,
                "n": m.n, "k": m.k,
                "variables": list(m.variables),
                "description": m.description,
                "contact_set": m.known.curve_description,
                "known_points": [{"label": p.label, "point": list(p.point), "kind": p.kind, "order": p.order,
                                  "slow_generic": p.slow_generic, "source": p.source, "note": p.note}
                                 for p in m.known.points],
                "third_order": dict(m.known.third_order),
            })
        out.append(entry)
    return out


def cmd_models(args, out):
    listing = _models_listing()
    if args.format == "csv":
        rows = []
        for e in listing:
            for v in e["variants"]:
                for p in v["known_points"]:
                    rows.append([e["name"], v["face"], p["label"], ";".join(fmt(float(x)) for x in p["point"]),
                                 p["kind"], p["order"], p["source"]])
        write_csv(["model", "face", "label", "point", "kind", "order", "source"], rows, out)
    else:
        dump_json({"models": listing}, out)


def verify_model(model, tol: cl.Tolerances, points: int = 50, seed: int = 0) -> dict:
    """Derivative cross-check plus comparison against the model's known answers."""
    rng = np.random.default_rng(seed)
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    sample = lo + (hi - lo) * rng.random((points, model.n))
    report = dv.validate_provider(model.provider, sample)
    checks = [{"check": f"validate {k}", "value": v, "tolerance": report.tolerances[k],
               "passed": v <= report.tolerances[k]} for k, v in report.discrepancies.items()]
    known = model.known
    for kp in known.points:
        z = np.array(kp.point, dtype=float)
        if kp.kind == "equilibrium":
            res = float(np.max(np.abs(model.N(z))))
            checks.append({"check": f"{kp.label} zero of N", "value": res, "tolerance": 1e-12,
                           "passed": res <= 1e-12})
            continue
        d = cl.classify(model, z, tol)
        c = d.classification
        ok = c.kind == kp.kind and (kp.order is None or c.order == kp.order) and (
            kp.slow_generic is None or c.slow_generic == kp.slow_generic)
        checks.append({"check": f"{kp.label} verdict", "value": c.label,
                       "expected": {"kind": kp.kind, "order": kp.order, "slow_generic": kp.slow_generic},
                       "passed": bool(ok)})
        if kp.label in known.third_order and d.cusp_coefficient is not None:
            err = abs(d.cusp_coefficient - known.third_order[kp.label])
            checks.append({"check": f"{kp.label} third-order coefficient", "value": d.cusp_coefficient,
                           "expected": known.third_order[kp.label], "tolerance": 1e-8, "passed": err <= 1e-8})
        if kp.label in known.C0 and d.C0 is not None:
            exp = np.asarray(known.C0[kp.label])
            err = float(np.max(np.abs(np.abs(d.C0) - np.abs(exp)))) if d.C0.shape == exp.shape else np.inf
            checks.append({"check": f"{kp.label} C0", "value": d.C0, "expected": exp, "tolerance": 1e-8,
                           "passed": err <= 1e-8})
    if known.curve is not None and known.fold_coefficient is not None:
        a, b = known.curve_range
        worst = 0.0
        for s in np.linspace(a, b, 7)[1:-1]:
            z = known.curve(s)
            fc = cl.classify(model, z, tol).fold_coefficient
            worst = max(worst, np.inf if fc is None else abs(fc - known.fold_coefficient(s)))
        checks.append({"check": "fold coefficient along contact set", "value": worst, "tolerance": 1e-8,
                       "passed": worst <= 1e-8})
    return {"model": model.name, "face": model.face, "parameters": dict(model.params), "points": points,
            "random_seed": seed, "checks": checks, "passed": all(c["passed"] for c in checks)}


def cmd_verify(args, out):
    model = _model(args)
    if args.points < 1:
        raise UsageError("--points must be at least 1")
    rep = verify_model(model, _tol(args), args.points, args.random_seed)
    dump_json(rep, out)
    return EXIT_OK if rep["passed"] else EXIT_NUMERIC


COMMANDS = {
    "analyze": cmd_analyze,
    "scan": cmd_scan,
    "fibers": cmd_fibers,
    "simulate": cmd_simulate,
    "models": cmd_models,
    "verify": cmd_verify,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout):
            args = parser.parse_args(_with_config(argv))
    except UsageError as exc:
        stderr.write(f"contactkit: usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(stderr)
        return EXIT_USAGE
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except UsageError as exc:
        stderr.write(f"contactkit: usage error: {exc}\n")
        return EXIT_USAGE
    except (ParameterError, UnknownModelError) as exc:
        stderr.write(f"contactkit: {exc.args[0] if exc.args else exc}\n")
        return EXIT_USAGE
    except (ContactKitError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        stderr.write(f"contactkit: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    text = buf.getvalue()
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return code or EXIT_OK


def run() -> None:
    sys.exit(main())
