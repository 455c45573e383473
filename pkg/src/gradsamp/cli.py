"""Command-line front end: ``gradsamp {list-problems,solve,bench,profile}``.

Exit status is 0 on success, 1 when a solver run fails, and 2 on usage
errors. Outputs go to ``--out``, else ``$GRADSAMP_OUTPUT_DIR``, else the
config file's ``out`` entry, else ``./gradsamp-out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from gradsamp import bench
from gradsamp.errors import NondifferentiablePoint
from gradsamp.problems import CATALOG, list_problems
from gradsamp.solver import SolverConfig

OUTPUT_ENV = "GRADSAMP_OUTPUT_DIR"
DEFAULT_OUT = "gradsamp-out"

# flag name -> SolverConfig field
SOLVER_FLAGS = {
    "eps0": float, "nu0": float, "mu": float, "theta": float, "gamma": float, "c": float,
    "m": int, "eps_opt": float, "nu_opt": float, "max_iters": int, "max_backtracks": int,
    "line_search": str, "f_l": float, "qp_tol": float,
}


class UsageError(Exception):
    pass


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver parameters (override scale defaults)")
    for name, typ in SOLVER_FLAGS.items():
        kw = dict(type=typ, default=None, dest=name)
        if name == "line_search":
            kw["choices"] = ["bals", "lbals"]
        g.add_argument("--" + name.replace("_", "-"), **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradsamp", description="Gradient sampling solvers (GS and GSI).")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{list-problems,solve,bench,profile}")

    lp = sub.add_parser("list-problems", help="print the problem catalog")
    lp.add_argument("--json", action="store_true", help="machine-readable output")
    lp.add_argument("--n", type=int, default=10, help="dimension used to show scalable problems")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values for these flags")
    common.add_argument("--out", help=f"output directory (env {OUTPUT_ENV})")
    common.add_argument("--scale", choices=["small", "medium", "large"], default=None)
    common.add_argument("--n", type=int, default=None, help="dimension of scalable problems")

    sp = sub.add_parser("solve", parents=[common], help="run one problem/method/seed")
    sp.add_argument("--problem", default=None, required=False)
    sp.add_argument("--method", choices=["gs", "gsi"], default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--json", action="store_true", help="print the full report JSON")
    _add_solver_flags(sp)

    bp = sub.add_parser("bench", parents=[common], help="run a seeded suite")
    bp.add_argument("--problems", default=None, help="comma-separated names (default: the scale's suite)")
    bp.add_argument("--method", choices=["gs", "gsi", "both"], default=None)
    bp.add_argument("--runs", type=int, default=None, help="runs per problem (default 5)")
    bp.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    bp.add_argument("--workers", type=int, default=None, help="parallel runs (default: logical CPUs)")
    bp.add_argument("--traces", action="store_true", help="also write JSON-lines traces")
    bp.add_argument("--no-svg", action="store_true")
    _add_solver_flags(bp)

    pp = sub.add_parser("profile", help="performance profiles from results CSV files")
    pp.add_argument("--input", action="append", default=None, help="results CSV (repeatable)")
    pp.add_argument("--metric", action="append", default=None, choices=list(bench.PROFILE_METRICS))
    pp.add_argument("--out", help=f"output directory (env {OUTPUT_ENV})")
    pp.add_argument("--config", help="JSON file with default values for these flags")
    pp.add_argument("--no-svg", action="store_true")
    return parser


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _pick(args, cfg: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.get(key, default)


def _out_dir(args, cfg: dict) -> Path:
    return Path(args.out or os.environ.get(OUTPUT_ENV) or cfg.get("out") or DEFAULT_OUT)


def _overrides(args, cfg: dict) -> dict:
    ov = dict(cfg.get("solver", {}))
    unknown = set(ov) - set(SOLVER_FLAGS)
    if unknown:
        raise UsageError(f"unknown solver parameter(s) in config: {', '.join(sorted(unknown))}")
    for name in SOLVER_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            ov[name] = v
    try:
        SolverConfig(**ov)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver parameters: {exc}") from exc
    return ov


def cmd_list_problems(args) -> int:
    rows = list_problems(reference_n=args.n)
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    print(f"{'name':20s} {'n':>6s} {'convex':>6s} {'f*':>22s}  title")
    for r in rows:
        fs = r["f_star"]
        fs = f"{fs:.10g}" if isinstance(fs, float) else str(fs)
        print(f"{r['name']:20s} {str(r['n']):>6s} {('yes' if r['convex'] else 'no'):>6s} {fs:>22s}  {r['title']}")
    return 0


def cmd_solve(args) -> int:
    cfg = _load_config(args.config)
    problem = _pick(args, cfg, "problem")
    if problem is None:
        raise UsageError("solve needs --problem")
    if problem not in CATALOG:
        raise UsageError(f"unknown problem {problem!r}")
    method = _pick(args, cfg, "method", "gsi")
    if method not in ("gs", "gsi"):
        raise UsageError(f"unknown method {method!r}")
    seed = int(_pick(args, cfg, "seed", 0))
    scale = _pick(args, cfg, "scale")
    n = _pick(args, cfg, "n")
    ov = _overrides(args, cfg)
    try:
        [(name, dim)] = bench.resolve_problems([problem if n is None else (problem, int(n))], None, scale)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    spec = bench.RunSpec(name, dim, method, seed, scale, tuple(sorted(ov.items())))
    try:
        report = bench.solve_one(spec, trace_dir=str(out))
    except (RuntimeError, NondifferentiablePoint) as exc:
        print(f"gradsamp: solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    stem = f"{report.problem}_n{report.n}_{report.method}_s{report.seed}"
    report_path = out / f"{stem}.json"
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        print(f"{report.problem} n={report.n} {report.method} seed={report.seed}: "
              f"{'success' if report.success else 'FAILED'} ({report.stop_reason}) "
              f"f={report.final_f:.10g} iters={report.iters} qp={report.qp_count} pii={report.pii:.3f}")
        print(f"report: {report_path}")
        print(f"trace:  {out / (stem + '.jsonl')}")
    return 0 if report.success else 1


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    scale = _pick(args, cfg, "scale", "small")
    problems = _pick(args, cfg, "problems")
    if isinstance(problems, str):
        problems = [p.strip() for p in problems.split(",") if p.strip()]
    if not problems:
        problems = bench.suite_problems(scale)
    unknown = [p for p in problems if p not in CATALOG]
    if unknown:
        raise UsageError(f"unknown problem(s): {', '.join(unknown)}")
    method = _pick(args, cfg, "method", "both")
    methods = ["gs", "gsi"] if method == "both" else [method]
    runs = int(_pick(args, cfg, "runs", 5))
    seed = int(_pick(args, cfg, "seed", 0))
    workers = int(_pick(args, cfg, "workers", bench.default_workers()))
    if runs < 1 or workers < 1:
        raise UsageError("--runs and --workers must be positive")
    ov = _overrides(args, cfg)
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    try:
        reports = bench.run_suite(problems, methods, runs, seed, _pick(args, cfg, "n"), scale, workers, ov,
                                  trace_dir=str(out / "traces") if args.traces else None)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    paths = bench.emit_reports(reports, out, svg=not args.no_svg)
    with open(out / "suite.json", "w") as fh:
        json.dump({"scale": scale, "problems": problems, "methods": methods, "runs": runs,
                   "base_seed": seed, "n": _pick(args, cfg, "n"), "solver_overrides": ov,
                   "summary": bench.summarize(reports)}, fh, indent=1)
    for row in bench.summarize(reports):
        print(f"{row['problem']:20s} {row['method']:4s} success {row['successes']}/{row['runs']} "
              f"median iters {row['median_iters']:.0f} median pii {row['median_pii']:.2f}")
    print(f"results: {paths['csv']}")
    return 1 if any(r.stop_reason == "error" for r in reports) else 0


def cmd_profile(args) -> int:
    cfg = _load_config(args.config)
    inputs = args.input or cfg.get("input")
    if isinstance(inputs, str):
        inputs = [inputs]
    if not inputs:
        raise UsageError("profile needs --input")
    metrics = args.metric or cfg.get("metric") or ["qp_time"]
    if isinstance(metrics, str):
        metrics = [metrics]
    rows = []
    for path in inputs:
        try:
            rows.extend(bench.read_results_csv(path))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    for metric in metrics:
        try:
            table = bench.profile_from_rows(rows, metric)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        data = out / f"profile_{metric}.csv"
        bench.write_profile_data(table, data)
        print(f"{metric}: {data}")
        if not args.no_svg:
            svg = out / f"profile_{metric}.svg"
            bench.write_profile_svg(table, svg)
            print(f"{metric}: {svg}")
        for name in table.solvers:
            print(f"  {name}: rho(1) = {table.rho(name, 1.0):.3f}, rho(inf) = {table.rho(name, float('inf')):.3f}")
    return 0


COMMANDS = {"list-problems": cmd_list_problems, "solve": cmd_solve, "bench": cmd_bench, "profile": cmd_profile}


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gradsamp: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
