"""Seeded benchmark suites, aggregate reports and performance profiles.

Every (problem, seed) pair gets one start point, drawn uniformly from the ball
around ``problem.x0`` of radius ``||x0|| / n``; all methods start from the same
point so comparisons are paired. Runs stop on the relative-error rule

    |f(x_k) - f*| / (|f*| + 1) < tol,

with ``tol`` 5e-4 on small problems and 1e-3 otherwise.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from gradsamp.problems import CATALOG, Problem, get_problem, problems_with_tag
from gradsamp.sampling import run_streams, sample_unit_ball
from gradsamp.solver import RunReport, SolverConfig, run, scale_class, write_trace

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "problem", "method", "seed", "iters", "nii", "pii", "f_eval", "g_eval",
    "qp_count", "qp_time", "cpu_time", "success",
]
TIMING_COLUMNS = ("qp_time", "cpu_time")
PROFILE_METRICS = ("cpu_time", "qp_time", "qp_count", "f_eval", "g_eval", "iters")
COUNT_METRICS = ("qp_count", "f_eval", "g_eval", "iters")
TOL_BY_SCALE = {"small": 5e-4, "medium": 1e-3, "large": 1e-3}
DEFAULT_N = {"small": 10, "medium": 100, "large": 1000}
MAX_RETRIES = 3
# smallest value a metric may take in a ratio; keeps 0 counts/times finite
METRIC_FLOOR = {"qp_count": 1.0, "f_eval": 1.0, "g_eval": 1.0, "iters": 1.0,
                "cpu_time": 1e-6, "qp_time": 1e-6}


@dataclass(frozen=True)
class StoppingRule:
    f_star: float
    tol: float

    def relative_error(self, f: float) -> float:
        return abs(f - self.f_star) / (abs(self.f_star) + 1.0)

    def __call__(self, f: float) -> bool:
        return self.relative_error(f) < self.tol

    @classmethod
    def for_problem(cls, problem: Problem, scale: Optional[str] = None) -> Optional["StoppingRule"]:
        """Rule at the scale tolerance, or None when f* is unknown."""
        if not math.isfinite(problem.f_star):
            return None
        return cls(problem.f_star, TOL_BY_SCALE[scale or scale_class(problem.n)])


def random_start(problem: Problem, rng: np.random.Generator) -> np.ndarray:
    """Uniform point of ``B(x0, ||x0|| / n)``, redrawn until differentiable."""
    x0 = np.asarray(problem.x0, dtype=float)
    radius = float(np.linalg.norm(x0)) / problem.n
    for _ in range(1000):
        x = x0 + radius * sample_unit_ball(rng, problem.n)
        if problem.is_differentiable(x):
            return x
    raise RuntimeError(f"{problem.name}: could not draw a differentiable start point")


@dataclass(frozen=True)
class RunSpec:
    problem: str
    n: Optional[int]
    method: str
    seed: int
    scale: Optional[str] = None
    overrides: Tuple[Tuple[str, object], ...] = ()


def run_spec(spec: RunSpec):
    """Run one (problem, method, seed) with experiment defaults.

    Returns ``(report, trace)``. A run whose bundle hits the nondifferentiable
    set is repeated with a fresh sampling stream (same start point), at most
    ``MAX_RETRIES`` times.
    """
    problem = get_problem(spec.problem, spec.n)
    scale = spec.scale or scale_class(problem.n)
    config = SolverConfig.defaults_for(problem.n, scale, seed=spec.seed, method=spec.method,
                                       **dict(spec.overrides))
    target = StoppingRule.for_problem(problem, scale)
    start_rng, sample_rng = run_streams(spec.seed)
    x_start = random_start(problem, start_rng)
    for attempt in range(MAX_RETRIES + 1):
        if attempt:
            log.warning("%s/%s seed %d: sampled a nondifferentiable point, retrying (%d)",
                        spec.problem, spec.method, spec.seed, attempt)
            sample_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([spec.seed, attempt])))
        report, trace = run(problem, config, sample_rng, target, x_start)
        report.retries = attempt
        if report.stop_reason != "nondiff_sample":
            break
    return report, trace


def solve_one(spec: RunSpec, trace_dir: Optional[str] = None) -> RunReport:
    """:func:`run_spec`, optionally writing the trace as JSON lines."""
    report, trace = run_spec(spec)
    if trace_dir is not None:
        write_trace(trace, Path(trace_dir) / f"{_run_stem(report)}.jsonl")
    return report


def _safe_solve(spec: RunSpec, trace_dir: Optional[str] = None) -> RunReport:
    try:
        return solve_one(spec, trace_dir)
    except Exception as exc:  # a failed run is a marked entry, never a suite abort
        log.error("%s/%s seed %d failed: %s", spec.problem, spec.method, spec.seed, exc)
        problem = get_problem(spec.problem, spec.n)
        nan = float("nan")
        empty = np.full(problem.n, nan)
        return RunReport(problem=problem.name, n=problem.n, method=spec.method, seed=spec.seed,
                         iters=0, nii=0, pii=0.0, direction_iters=0, f_eval=0, g_eval=0,
                         qp_count=0, qp_time=0.0, serious_count=0, wall_time=0.0, cpu_time=0.0,
                         final_f=nan, final_x=empty, success=False, stop_reason="error",
                         x_start=empty, f_start=nan, error=f"{type(exc).__name__}: {exc}")


def _run_stem(report: RunReport) -> str:
    return f"{report.problem}_n{report.n}_{report.method}_s{report.seed}"


ProblemSpec = Union[str, Tuple[str, int]]


def resolve_problems(problems: Iterable[ProblemSpec], n: Optional[int] = None,
                     scale: Optional[str] = None) -> List[Tuple[str, Optional[int]]]:
    """Pair each problem name with a dimension (None for fixed-size problems)."""
    out = []
    for p in problems:
        name, dim = (p, None) if isinstance(p, str) else (p[0], p[1])
        if name not in CATALOG:
            raise KeyError(f"unknown problem {name!r}")
        if CATALOG[name].scalable:
            dim = dim or n or DEFAULT_N[scale or "medium"]
        elif dim is not None and dim != CATALOG[name].fixed_n:
            raise ValueError(f"problem {name!r} has fixed dimension {CATALOG[name].fixed_n}")
        out.append((name, dim))
    return out


def suite_problems(scale: str) -> List[str]:
    return problems_with_tag(scale)


def run_suite(problems: Sequence[ProblemSpec], methods: Sequence[str] = ("gs", "gsi"),
              runs_per_problem: int = 5, base_seed: int = 0, n: Optional[int] = None,
              scale: Optional[str] = None, workers: int = 1, overrides: Optional[dict] = None,
              trace_dir: Optional[str] = None) -> List[RunReport]:
    """One report per (problem, method, seed), in that nesting order.

    Seeds are ``base_seed, ..., base_seed + runs_per_problem - 1``. With
    ``workers > 1`` runs go to a process pool; results do not depend on it.
    """
    for m in methods:
        if m not in ("gs", "gsi"):
            raise ValueError(f"unknown method {m!r}")
    if runs_per_problem < 1:
        raise ValueError("runs_per_problem must be at least 1")
    ov = tuple(sorted((overrides or {}).items()))
    if ov:
        SolverConfig(**dict(ov))  # validate before any run starts
    specs = [RunSpec(name, dim, method, base_seed + r, scale, ov)
             for name, dim in resolve_problems(problems, n, scale)
             for method in methods
             for r in range(runs_per_problem)]
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
    if workers <= 1 or len(specs) <= 1:
        return [_safe_solve(s, trace_dir) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_safe_solve, specs, [trace_dir] * len(specs)))


# ---------------------------------------------------------------------------
# performance profiles


@dataclass
class ProfileTable:
    """Dolan-More profile of one metric.

    ``values[s, p]`` is the metric of solver ``s`` on instance ``p`` (NaN marks
    a failure). ``curves[s]`` is an array of ``(tau, rho)`` breakpoints of the
    right-continuous step function ``rho_s``.
    """

    metric: str
    solvers: List[str]
    instances: List[tuple]
    values: np.ndarray
    ratios: np.ndarray
    curves: Dict[str, np.ndarray]
    excluded: List[tuple] = field(default_factory=list)

    def rho(self, solver: str, tau: float) -> float:
        r = self.ratios[self.solvers.index(solver)]
        if r.size == 0:
            return 0.0
        return float(np.count_nonzero(r <= tau)) / r.size


def performance_profile(values, solvers: Sequence[str], metric: str = "metric",
                        instances: Optional[Sequence[tuple]] = None,
                        floor: Optional[float] = None) -> ProfileTable:
    """Profile a solvers x instances matrix of metric values.

    NaN or infinite entries are failures and get ratio +inf. Instances where
    every solver failed are dropped with a warning. Values are raised to
    ``floor`` (default from ``METRIC_FLOOR``, else 0) before taking ratios so
    that zero counts remain comparable.
    """
    V = np.array(values, dtype=float)
    if V.ndim != 2 or V.shape[0] < 2:
        raise ValueError("need a solvers x instances matrix with at least two solvers")
    if V.shape[0] != len(solvers):
        raise ValueError("one row per solver expected")
    instances = list(instances) if instances is not None else [(j,) for j in range(V.shape[1])]
    if floor is None:
        floor = METRIC_FLOOR.get(metric, 0.0)
    failed = ~np.isfinite(V)
    if np.any(V[~failed] < 0):
        raise ValueError("metric values must be nonnegative")
    keep = ~np.all(failed, axis=0)
    excluded = [inst for inst, k in zip(instances, keep) if not k]
    if excluded:
        warnings.warn(f"{metric}: {len(excluded)} instance(s) failed for every solver and were excluded")
    V, failed = V[:, keep], failed[:, keep]
    kept = [inst for inst, k in zip(instances, keep) if k]
    W = np.where(failed, np.inf, np.maximum(V, floor))
    best = np.min(W, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.where(failed, np.inf, W / best)
    if floor == 0.0:
        # 0/0: both at the best value
        R = np.where(~failed & (W == 0.0) & (best == 0.0), 1.0, R)
    curves = {}
    for s, name in enumerate(solvers):
        r = R[s]
        finite = np.sort(r[np.isfinite(r)])
        taus = np.unique(np.concatenate(([1.0], finite)))
        rho = np.array([np.count_nonzero(r <= t) for t in taus], dtype=float) / max(r.size, 1)
        curves[name] = np.column_stack([taus, rho])
    return ProfileTable(metric, list(solvers), kept, V, R, curves, excluded)


def metric_matrix(rows: Sequence[dict], metric: str) -> Tuple[np.ndarray, List[str], List[tuple]]:
    """Solvers x (problem, seed) matrix from report rows; failures become NaN."""
    solvers = sorted({r["method"] for r in rows}, key=lambda m: (m != "gsi", m))
    instances = sorted({(r["problem"], int(r["seed"])) for r in rows})
    index = {inst: j for j, inst in enumerate(instances)}
    V = np.full((len(solvers), len(instances)), np.nan)
    for r in rows:
        if _truthy(r["success"]):
            V[solvers.index(r["method"]), index[(r["problem"], int(r["seed"]))]] = float(r[metric])
    return V, solvers, instances


def _truthy(v) -> bool:
    if isinstance(v, str):
        return v.strip().lower() in ("1", "true", "yes")
    return bool(v)


def profile_from_rows(rows: Sequence[dict], metric: str) -> ProfileTable:
    if metric not in PROFILE_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(PROFILE_METRICS)}")
    V, solvers, instances = metric_matrix(rows, metric)
    return performance_profile(V, solvers, metric, instances)


def read_results_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames)[: len(CSV_COLUMNS)] != CSV_COLUMNS:
            raise ValueError(f"{path}: header does not match {','.join(CSV_COLUMNS)}")
        return list(reader)


def profile_from_csv(path, metric: str) -> ProfileTable:
    return profile_from_rows(read_results_csv(path), metric)


# ---------------------------------------------------------------------------
# output


def report_row(report: RunReport) -> dict:
    return {
        "problem": report.problem,
        "method": report.method,
        "seed": report.seed,
        "iters": report.iters,
        "nii": report.nii,
        "pii": repr(float(report.pii)),
        "f_eval": report.f_eval,
        "g_eval": report.g_eval,
        "qp_count": report.qp_count,
        "qp_time": repr(float(report.qp_time)),
        "cpu_time": repr(float(report.cpu_time)),
        "success": int(bool(report.success)),
    }


def write_results_csv(reports: Sequence[RunReport], path) -> None:
    _write(path, lambda fh: _csv_body(fh, reports))


def _csv_body(fh, reports):
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(report_row(r))


def write_profile_data(table: ProfileTable, path) -> None:
    """Long-format CSV: solver, tau, rho (one row per breakpoint)."""

    def body(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["solver", "tau", "rho"])
        for name in table.solvers:
            for tau, rho in table.curves[name]:
                w.writerow([name, repr(float(tau)), repr(float(rho))])

    _write(path, body)


def read_profile_data(path) -> Dict[str, np.ndarray]:
    curves: Dict[str, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            curves.setdefault(row["solver"], []).append((float(row["tau"]), float(row["rho"])))
    return {k: np.array(v) for k, v in curves.items()}


def write_profile_svg(table: ProfileTable, path) -> None:
    """Step plot of the profile curves as a standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "gradsamp"
    fig, ax = plt.subplots(figsize=(6, 4))
    tau_max = 1.0
    for name in table.solvers:
        c = table.curves[name]
        tau_max = max(tau_max, float(c[-1, 0]))
    tau_max *= 1.1
    for name in table.solvers:
        c = table.curves[name]
        taus = np.append(c[:, 0], tau_max)
        rhos = np.append(c[:, 1], c[-1, 1])
        ax.step(taus, rhos, where="post", label=name.upper())
    ax.set_xscale("log", base=2)
    ax.set_xlim(1.0, tau_max)
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("tau")
    ax.set_ylabel("fraction of instances")
    ax.set_title(f"Performance profile: {table.metric}")
    ax.legend(loc="lower right")
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def _write(path, body) -> None:
    try:
        with open(path, "w", newline="") as fh:
            body(fh)
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc


def emit_reports(reports: Sequence[RunReport], out_dir, metrics: Sequence[str] = PROFILE_METRICS,
                 svg: bool = True) -> Dict[str, Path]:
    """Write per-run JSON, ``results.csv`` and one profile per metric.

    Profiles need at least two methods in ``reports``; otherwise only the runs
    and the CSV are written. Returns the main output paths by name.
    """
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    paths = {}
    for r in reports:
        p = out / "runs" / f"{_run_stem(r)}.json"
        _write(p, lambda fh, r=r: json.dump(r.to_dict(), fh, indent=1, default=_json_default))
    paths["csv"] = out / "results.csv"
    write_results_csv(reports, paths["csv"])
    if len({r.method for r in reports}) >= 2:
        rows = [report_row(r) for r in reports]
        (out / "profiles").mkdir(exist_ok=True)
        for metric in metrics:
            table = profile_from_rows(rows, metric)
            paths[f"profile_{metric}"] = out / "profiles" / f"{metric}.csv"
            write_profile_data(table, paths[f"profile_{metric}"])
            if svg:
                paths[f"svg_{metric}"] = out / "profiles" / f"{metric}.svg"
                write_profile_svg(table, paths[f"svg_{metric}"])
    return paths


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def summarize(reports: Sequence[RunReport]) -> List[dict]:
    """Per (problem, method) medians and success counts."""
    groups: Dict[Tuple[str, str], List[RunReport]] = {}
    for r in reports:
        groups.setdefault((r.problem, r.method), []).append(r)
    out = []
    for (problem, method), rs in groups.items():
        out.append({
            "problem": problem,
            "method": method,
            "runs": len(rs),
            "successes": sum(r.success for r in rs),
            "median_iters": float(np.median([r.iters for r in rs])),
            "median_pii": float(np.median([r.pii for r in rs])),
            "median_qp_count": float(np.median([r.qp_count for r in rs])),
        })
    return out


def default_workers() -> int:
    return os.cpu_count() or 1
