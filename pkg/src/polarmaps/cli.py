"""Command line interface.

Subcommands::

    polarmaps run SPEC.json [SPEC.json ...] [--jobs N]
    polarmaps compare SPEC.json
    polarmaps darboux SPEC.json --degree-bound D
    polarmaps problems list | show NAME
    polarmaps verify-paper [--only K ...]

``--steps``, ``--h``, ``--seed`` and ``--out`` override the matching spec
fields. With an output directory, runs write ``<name>.csv`` and
``<name>.json``; without one the JSON report goes to stdout.

Exit codes: 0 success, 2 configuration error, 3 singular step, 4 acceptance
failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .exceptions import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_ACCEPTANCE = 4


def _overrides(args) -> dict:
    return {"steps": args.steps, "h": args.h, "seed": args.seed, "out": args.out}


def _load(path: str, args):
    from .harness import load_spec

    return load_spec(path).with_overrides(**_overrides(args))


def _out_dir(spec) -> Path | None:
    if spec.out is None:
        return None
    d = Path(spec.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _emit(text: str, path: Path | None):
    if path is None:
        print(text)
    else:
        path.write_text(text + "\n")


def cmd_run(args) -> int:
    from .harness import run_trajectory

    specs = [_load(p, args) for p in args.spec]
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(run_trajectory, specs))
    code = EXIT_OK
    for spec, rep in zip(specs, reports):
        d = _out_dir(spec)
        if d is not None:
            rep.to_csv(d / f"{spec.name}.csv")
            _emit(rep.to_json(), d / f"{spec.name}.json")
            print(f"{spec.name}: {rep.status}, {rep.steps_completed} steps -> {d / spec.name}.csv")
        else:
            _emit(rep.to_json(), None)
        if rep.status == "singular":
            print(f"{spec.name}: {rep.message}", file=sys.stderr)
            code = EXIT_SINGULAR
    return code


def cmd_compare(args) -> int:
    from .harness import compare_integrators

    spec = _load(args.spec, args)
    reports = compare_integrators(spec)
    d = _out_dir(spec)
    table = {m: {"status": r.status, "summary": r.summary} for m, r in reports.items()}
    if d is not None:
        for m, r in reports.items():
            r.to_csv(d / f"{spec.name}.{m}.csv")
        _emit(json.dumps(table, indent=2), d / f"{spec.name}.compare.json")
    width = max(len(m) for m in reports)
    for m, r in reports.items():
        s = r.summary
        print(f"{m:<{width}}  status={r.status}  H_max_abs_drift={s['H_max_abs_drift']}  H_drift_slope={s['H_drift_slope']}")
    return EXIT_SINGULAR if any(r.status == "singular" for r in reports.values()) else EXIT_OK


def cmd_darboux(args) -> int:
    from .darboux import discover, polar_birational_map

    spec = _load(args.spec, args)
    if spec.mode == "higher-order":
        raise ConfigError("mode: Darboux discovery needs a second-order system")
    if args.degree_bound < 1:
        raise ConfigError("--degree-bound must be at least 1")
    bmap = polar_birational_map(spec.system(), spec.h)
    report = discover(
        bmap, args.degree_bound, max_exponent=args.max_exponent, max_factors=args.max_factors, seed=spec.seed
    )
    d = _out_dir(spec)
    _emit(report.to_json(), None if d is None else d / f"{spec.name}.darboux.json")
    for inv in report.invariants:
        expr = " * ".join(f"({P})^{a}" for P, a in inv.factors)
        print(f"{inv.kind}: {expr}", file=sys.stderr)
    return EXIT_OK


def cmd_problems(args) -> int:
    from .harness import builtin_problems, get_problem

    if args.action == "list":
        for p in builtin_problems():
            print(f"{p.name:<28} {p.mode:<15} n={p.n}  {p.data.get('description', '')}")
        return EXIT_OK
    if not args.name:
        raise ConfigError("problems show: missing problem name")
    try:
        p = get_problem(args.name)
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from e
    print(p.to_json())
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import CHECKS, run_all

    unknown = sorted(set(args.only or ()) - set(CHECKS))
    if unknown:
        raise ConfigError(f"--only: unknown criteria {unknown}")
    results = run_all(args.only, echo=lambda line: print(line, flush=True))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--steps", type=int, help="override the number of steps")
    common.add_argument("--h", help="override the step size (number or fraction such as 1/10)")
    common.add_argument("--seed", type=int, help="override the seed for random initial data")
    common.add_argument("--out", help="output directory for CSV and JSON files")

    p = argparse.ArgumentParser(prog="polarmaps", description="Polar map integrators, invariants and Darboux discovery.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="iterate the polar map of one or more specs")
    r.add_argument("spec", nargs="+")
    r.add_argument("--jobs", type=int, default=1, help="worker threads for independent specs")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", parents=[common], help="polar map against baseline integrators")
    c.add_argument("spec")
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("darboux", parents=[common], help="search for Darboux polynomials of the polar map")
    d.add_argument("spec")
    d.add_argument("--degree-bound", type=int, required=True)
    d.add_argument("--max-exponent", type=int, default=3)
    d.add_argument("--max-factors", type=int, default=4)
    d.set_defaults(func=cmd_darboux)

    pr = sub.add_parser("problems", help="built-in problem library")
    pr.add_argument("action", choices=["list", "show"])
    pr.add_argument("name", nargs="?")
    pr.set_defaults(func=cmd_problems)

    v = sub.add_parser("verify-paper", help="run the acceptance checks")
    v.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
