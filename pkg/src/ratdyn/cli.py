"""Command-line front end.

Every subcommand writes its data files (JSON for reports, CSV for point
clouds and tables) plus ``manifest.json`` into ``--out``.  Exit codes: 0 on
success, 1 on a domain error (the error is written as JSON), 2 on a usage
error.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import RatDynError

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- helpers -------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _dump(data, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def parse_complex_list(text):
    """'1, 0.5+2j, -i' -> complex array."""
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "").replace("i", "j")
        if not tok:
            raise UsageError(f"empty coordinate in '{text}'")
        try:
            out.append(complex(tok))
        except ValueError:
            raise UsageError(f"cannot read '{tok}' as a complex number") from None
    return np.array(out, dtype=complex)


def _load_map_arg(args):
    from .ratmap import load_map
    if not args.map:
        raise UsageError("--map is required")
    if not os.path.isfile(args.map):
        raise UsageError(f"map file not found: {args.map}")
    try:
        P = load_map(args.map)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        if isinstance(exc, RatDynError):
            raise
        raise UsageError(f"cannot read map file {args.map}: {exc}") from None
    with open(args.map, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    return P, digest


def _resolve_target(spec, dim, seed):
    """``random`` | path to a JSON list | comma-separated coordinates."""
    from .projcore import sample_fs_array
    if spec is None or spec == "random":
        return sample_fs_array(dim, 1, seed, shard_index=2, shard_count=5)[0]
    if os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            data = json.load(fh)
        arr = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in data])
    else:
        arr = parse_complex_list(spec)
    if len(arr) == dim:
        arr = np.concatenate([[1.0], arr])  # affine coordinates
    if len(arr) != dim + 1:
        raise UsageError(f"target needs {dim} affine or {dim + 1} homogeneous coordinates")
    return arr


# --- subcommands ---------------------------------------------------------------

def cmd_degrees(args, ctx):
    from .degrees import degree_table
    P, _ = ctx["map"]
    reports = degree_table(P, args.kmax, seed=args.seed)
    data = {"map_id": P.map_id(), "kmax": args.kmax,
            "reports": [r.to_dict() for r in reports]}
    for l in range(1, min(P.n, P.m) + 1):
        data[f"delta{l}"] = [r.deltas[l - 1] for r in reports]
    data["q"] = [r.q for r in reports]
    ctx["write_json"]("degrees.json", data)
    return data


def cmd_iterate(args, ctx):
    from .ratmap import iterates
    P, _ = ctx["map"]
    its = iterates(P, args.kmax)
    data = {"map_id": P.map_id(),
            "iterates": [{"k": k, "degree": M.degree, **M.to_dict()} for k, M in enumerate(its, 1)]}
    ctx["write_json"]("iterate.json", data)
    return {"map_id": P.map_id(), "degrees": [M.degree for M in its]}


def cmd_fiber(args, ctx):
    from .solve import fiber, fiber_residual
    P, _ = ctx["map"]
    w = _resolve_target(args.target, P.m, args.seed)
    kw = {} if args.tolerance is None else {"indeterminacy_tol": args.tolerance}
    F = fiber(P, w, chart_seed=args.seed, **kw)
    data = {"target": w, "count": F.count(), "method": F.method,
            "points": F.points_array, "multiplicities": F.multiplicities,
            "excluded_indeterminate": F.excluded_array,
            "excluded_multiplicities": F.excluded_multiplicities,
            "residual": fiber_residual(P, F, w)}
    ctx["write_json"]("fiber.json", data)
    return {"count": F.count(), "residual": data["residual"]}


def cmd_sample(args, ctx):
    from .measures import backward_tree, backward_walk
    P, _ = ctx["map"]
    w = _resolve_target(args.target, P.m, args.seed)
    if args.method == "tree":
        m = backward_tree(P, w, args.depth, seed=args.seed)
    else:
        m = backward_walk(P, w, burn_in=args.burn_in, samples=args.samples, seed=args.seed)
    path = ctx["path"]("measure.csv")
    m.to_csv(path)
    ctx["outputs"].append(path)
    summary = {"method": args.method, "atoms": len(m), "total_weight": m.total_weight,
               "exact_total": str(m.exact_total) if m.exact_total is not None else None,
               "shortfall": str(m.shortfall), "target": w, "info": m.info}
    ctx["write_json"]("sample.json", summary)
    return summary


def cmd_green(args, ctx):
    from .measures import green_estimate, affine_grid
    P, _ = ctx["map"]
    base = args.base if args.base else float(P.degree)
    if args.points:
        grid = np.array([parse_complex_list(p) for p in args.points.split(";")])
    else:
        grid = affine_grid(-args.extent, args.extent, args.grid, P.n)
    kw = {} if args.tolerance is None else {"guard": args.tolerance}
    est = green_estimate(P, args.kmax, base, grid, **kw)
    path = ctx["path"]("green.csv")
    with open(path, "w", encoding="utf-8") as fh:
        cols = [f"re_x{i + 1},im_x{i + 1}" for i in range(grid.shape[1])]
        fh.write(",".join(cols) + ",G\n")
        for pt, v in zip(grid, est.values):
            fh.write(",".join(f"{repr(float(x.real))},{repr(float(x.imag))}" for x in pt))
            fh.write(f",{repr(float(v))}\n")
    ctx["outputs"].append(path)
    summary = {"k": est.k, "normalizer": est.normalizer, "points": len(grid),
               "indeterminate": len(est.indeterminate)}
    ctx["write_json"]("green.json", summary)
    return summary


def cmd_proximity(args, ctx):
    from .proximity import Target, proximity_estimate
    from .ratmap import iterate
    P, _ = ctx["map"]
    w = _resolve_target(args.target, P.m, args.seed)
    T = Target(args.kind, w)
    M = iterate(P, args.kmax) if args.kmax > 1 else P
    est = proximity_estimate(M, T, args.samples, args.seed)
    data = {"kind": args.kind, "target": T.data, "k": args.kmax, **est.to_dict()}
    ctx["write_json"]("proximity.json", data)
    return data


def _scan_targets(args, P):
    from .proximity import Target, haar_targets
    kind = "hyperplane" if args.l == 1 else "point"
    if args.targets:
        with open(args.targets, encoding="utf-8") as fh:
            raw = json.load(fh)
        return [Target(kind, np.array([complex(*v) if isinstance(v, list) else complex(v) for v in row]))
                for row in raw]
    targets = haar_targets(P.m, args.random_targets, kind, args.seed)
    if args.l == 1:
        targets += [Target.hyperplane(e) for e in np.eye(P.m + 1)]
    return targets


def cmd_scan(args, ctx):
    from .proximity import exceptional_scan, scan_to_csv, default_threshold
    P, _ = ctx["map"]
    targets = _scan_targets(args, P)
    a_base = args.a_base if args.a_base else default_threshold(P, args.l)
    rows = exceptional_scan(P, args.l, targets, args.kmax, a_base, args.samples, args.seed)
    path = ctx["path"]("scan.csv")
    scan_to_csv(rows, path)
    ctx["outputs"].append(path)
    summary = {"l": args.l, "a_base": a_base, "targets": len(rows),
               "flagged": [i for i, r in enumerate(rows) if r.flag == "exceptional_candidate"]}
    ctx["write_json"]("scan.json", summary)
    return summary


def cmd_repro(args, ctx):
    from .repro import repro_examples, write_table
    rows = repro_examples(seed=args.seed, quick=args.quick)
    path = ctx["path"]("repro.csv")
    write_table(rows, path)
    ctx["outputs"].append(path)
    data = {"rows": rows, "passed": sum(r["status"] == "PASS" for r in rows), "total": len(rows)}
    ctx["write_json"]("repro.json", data)
    for r in rows:
        print(f"{r['status']:4s}  {r['example']:<12s} {r['quantity']:<44s} "
              f"expected={r['expected']}  computed={r['computed']}")
    return {"passed": data["passed"], "total": data["total"]}


COMMANDS = {
    "degrees": cmd_degrees, "iterate": cmd_iterate, "fiber": cmd_fiber, "sample": cmd_sample,
    "green": cmd_green, "proximity": cmd_proximity, "scan": cmd_scan, "repro": cmd_repro,
}
NEEDS_MAP = set(COMMANDS) - {"repro"}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--map", help="map file (JSON with n, m, variables, components)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="ratdyn_out", help="output directory")
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap; results never depend on it")
    common.add_argument("--tolerance", type=float, default=None,
                        help="indeterminacy tolerance for fiber and green (module default if unset)")
    common.add_argument("--kmax", type=int, default=3)
    common.add_argument("--depth", type=int, default=5)
    common.add_argument("--samples", type=int, default=10_000)
    common.add_argument("--target", default="random", help="random | FILE | comma-separated coords")

    p = _Parser(prog="ratdyn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ratdyn {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("degrees", parents=[common], help="degree table of the iterates")
    sub.add_parser("iterate", parents=[common], help="write the iterates P_1..P_kmax")
    sub.add_parser("fiber", parents=[common], help="pre-images of one target")
    s = sub.add_parser("sample", parents=[common], help="backward tree or walk")
    s.add_argument("--method", choices=["tree", "walk"], default="tree")
    s.add_argument("--burn-in", type=int, default=50)
    g = sub.add_parser("green", parents=[common], help="Green function approximation")
    g.add_argument("--base", type=float, default=None, help="normalizer base (default: degree)")
    g.add_argument("--grid", type=int, default=20)
    g.add_argument("--extent", type=float, default=3.0)
    g.add_argument("--points", default=None, help="';'-separated affine points instead of a grid")
    x = sub.add_parser("proximity", parents=[common], help="proximity of P_kmax to a target")
    x.add_argument("--kind", choices=["hyperplane", "point"], default="hyperplane")
    c = sub.add_parser("scan", parents=[common], help="exceptional-target growth scan")
    c.add_argument("--l", type=int, default=1)
    c.add_argument("--a-base", type=float, default=None)
    c.add_argument("--targets", default=None, help="JSON list of target vectors")
    c.add_argument("--random-targets", type=int, default=20)
    r = sub.add_parser("repro", parents=[common], help="reproduce the worked examples")
    r.add_argument("--quick", action="store_true", help="skip the slow scan rows")
    return p


def run(argv=None):
    """Entry point; returns the exit code."""
    t0 = time.time()
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        ctx = {"outputs": []}
        if args.command in NEEDS_MAP:
            ctx["map"] = _load_map_arg(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    os.makedirs(args.out, exist_ok=True)

    def path(name):
        return os.path.join(args.out, name)

    def write_json(name, data):
        p = path(name)
        _dump(data, p)
        ctx["outputs"].append(p)

    ctx["path"] = path
    ctx["write_json"] = write_json
    code = EXIT_OK
    try:
        result = COMMANDS[args.command](args, ctx)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RatDynError as exc:
        result = exc.to_dict()
        write_json("error.json", result)
        code = EXIT_DOMAIN
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "seed", "out")}
    manifest = {
        "command": args.command,
        "map_file_hash": ctx["map"][1] if "map" in ctx else None,
        "seeds": [args.seed],
        "parameters": params,
        "outputs": sorted(os.path.relpath(p, args.out) for p in ctx["outputs"]),
        "tool_version": __version__,
        "wall_time": round(time.time() - t0, 3),
        "exit_code": code,
    }
    _dump(manifest, path("manifest.json"))
    print(json.dumps(_jsonable(result), sort_keys=True))
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
