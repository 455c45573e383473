"""Gradient sampling drivers (GS and GSI).

Both methods share one loop. At iteration k a bundle of ``m + 1`` gradients is
sampled from ``B(x_k, eps_k)``. GSI first forms the ideal vector and only
solves the min-norm QP when that vector is no longer than ``nu_k``; GS always
solves the QP. If the resulting vector is no longer than ``nu_k`` the point is
declared (nu_k, eps_k)-stationary, both parameters shrink, and the iterate
stays put. Otherwise an Armijo line search along the normalized direction
moves the iterate, with a random perturbation if the new point lands on the
nondifferentiable set.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np

from gradsamp.direction import QP_TOL, QPStats, ideal_direction, min_norm_qp, normalize
from gradsamp.errors import NondifferentiablePoint, NondifferentiableSample, PerturbationFailed
from gradsamp.linesearch import MAX_BACKTRACKS, bals, lbals, lbals_threshold
from gradsamp.sampling import build_bundle, make_rng, sample_unit_ball

PERTURB_ATTEMPTS = 64


def scale_class(n: int) -> str:
    if n <= 50:
        return "small"
    if n <= 200:
        return "medium"
    return "large"


NU0_BY_SCALE = {"small": 1e-3, "medium": 1e-2, "large": 1e-1}


@dataclass
class SolverConfig:
    eps0: float = 1e-3
    nu0: float = 1e-3
    mu: float = 0.5
    theta: float = 0.5
    gamma: float = 0.5
    c: float = 1e-6
    m: Optional[int] = None  # None means 2n
    eps_opt: float = 0.0
    nu_opt: float = 0.0
    max_iters: int = 2000
    max_backtracks: int = MAX_BACKTRACKS
    line_search: Literal["bals", "lbals"] = "bals"
    method: Literal["gs", "gsi"] = "gsi"
    seed: int = 0
    f_l: Optional[float] = None
    qp_tol: float = QP_TOL

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("mu", "theta", "gamma", "c"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
        if not self.eps0 > 0.0:
            raise ValueError("eps0 must be positive")
        if not self.nu0 > 0.0:
            raise ValueError("nu0 must be positive")
        if self.eps_opt < 0.0 or self.nu_opt < 0.0:
            raise ValueError("eps_opt and nu_opt must be nonnegative")
        if self.m is not None and self.m < 1:
            raise ValueError("sample size m must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")
        if self.line_search not in ("bals", "lbals"):
            raise ValueError(f"unknown line search {self.line_search!r}")
        if self.method not in ("gs", "gsi"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.qp_tol > 0.0:
            raise ValueError("qp_tol must be positive")

    @classmethod
    def defaults_for(cls, n: int, scale: Optional[str] = None, **overrides) -> "SolverConfig":
        """Experimental defaults for an ``n``-dimensional problem.

        ``m = 2n``; ``eps0`` is 1e-3 up to n = 10 and 1e-2 beyond; ``nu0`` is
        1e-3 / 1e-2 / 1e-1 for small / medium / large problems.
        """
        scale = scale or scale_class(n)
        if scale not in NU0_BY_SCALE:
            raise ValueError(f"unknown scale {scale!r}")
        base = dict(eps0=1e-3 if n <= 10 else 1e-2, nu0=NU0_BY_SCALE[scale], m=2 * n)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def fixed_tolerance(cls, nu: float, eps: float, **overrides) -> "SolverConfig":
        """LBALS with ``nu0 = nu_opt`` and ``eps0 = eps_opt``.

        The loop then ends at the first (nu, eps)-stationary point, which makes
        the serious-iteration bound directly observable.
        """
        base = dict(nu0=nu, nu_opt=nu, eps0=eps, eps_opt=eps, line_search="lbals")
        base.update(overrides)
        return cls(**base)

    def sample_size(self, n: int) -> int:
        return self.m if self.m is not None else 2 * n

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    f_x: float
    direction_kind: Literal["ideal", "steepest_approx", "none"]
    g_norm: float
    t: float
    eps: float
    nu: float
    serious: bool
    null_reason: Literal["stationarity_shrink", "lbals_null", "bals_exhausted", "none"]
    perturbed: bool
    qp_solved: bool
    f_next: float
    step_norm: float
    backtracks: int = 0
    ideal_norm: Optional[float] = None  # ||g^I||, GSI only

    def to_dict(self, include_x: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if include_x:
            d["x"] = self.x.tolist()
        else:
            d.pop("x")
        return d


@dataclass
class RunReport:
    problem: str
    n: int
    method: str
    seed: int
    iters: int
    nii: int
    pii: float
    direction_iters: int
    f_eval: int
    g_eval: int
    qp_count: int
    qp_time: float
    serious_count: int
    wall_time: float
    cpu_time: float  # run time used in profiles; equal to wall_time
    final_f: float
    final_x: np.ndarray
    success: bool
    stop_reason: Literal["tolerance_met", "target_met", "max_iters", "nondiff_sample", "error"]
    x_start: np.ndarray
    f_start: float
    config: dict = field(default_factory=dict)
    final_eps: float = 0.0
    final_nu: float = 0.0
    perturbations: int = 0
    qp_fallbacks: int = 0
    retries: int = 0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["final_x"] = self.final_x.tolist()
        d["x_start"] = self.x_start.tolist()
        return d


class _CountingOracle:
    """Function/gradient access with evaluation counters."""

    def __init__(self, problem):
        self.problem = problem
        self.f_eval = 0
        self.g_eval = 0

    def f(self, x) -> float:
        self.f_eval += 1
        return float(self.problem.f(x))

    def grad(self, x) -> np.ndarray:
        if not self.problem.is_differentiable(x):
            raise NondifferentiablePoint(x)
        self.g_eval += 1
        return np.asarray(self.problem.grad(x), dtype=float)

    def grad_rows(self, X):
        rows, flags = self.problem.gradients(X)
        self.g_eval += int(np.count_nonzero(~flags))
        return rows, flags

    def differentiable(self, x) -> bool:
        return self.problem.is_differentiable(x)


def stationarity_update(nu: float, eps: float, theta: float, mu: float) -> Tuple[float, float]:
    """Shrink tolerance and radius after a (nu, eps)-stationary point."""
    return theta * nu, mu * eps


def perturb_iterate(problem, x_k, f_xk: float, t_k: float, d_k, eps_k: float, g_k, c: float,
                    rng: np.random.Generator, f: Optional[Callable] = None,
                    attempts: int = PERTURB_ATTEMPTS) -> Tuple[np.ndarray, float]:
    """Move ``x_k + t_k d_k`` off the nondifferentiable set.

    Returns ``(x_hat, f(x_hat))`` with ``x_hat`` differentiable,
    ``f(x_hat) - f(x_k) < -c t_k ||g_k||`` and
    ``||x_k + t_k d_k - x_hat|| <= min(t_k, eps_k)``. Attempt ``j`` samples the
    ball of radius ``min(t_k, eps_k) * 2**-j`` around the candidate.
    """
    f = f or problem.f
    x_k = np.asarray(x_k, dtype=float)
    cand = x_k + t_k * np.asarray(d_k, dtype=float)
    if problem.is_differentiable(cand):
        return cand, float(f(cand))
    radius = min(t_k, eps_k)
    bound = f_xk - c * t_k * float(np.linalg.norm(g_k))
    for j in range(attempts):
        r = radius * 2.0 ** (-j)
        y = cand + r * sample_unit_ball(rng, cand.size)
        if not problem.is_differentiable(y) or np.linalg.norm(y - cand) > radius:
            continue
        fy = float(f(y))
        if fy < bound:
            return y, fy
    raise PerturbationFailed(f"no admissible perturbation after {attempts} attempts")


def serious_iteration_bound(config: SolverConfig, f_x0: float, nu: Optional[float] = None,
                            eps: Optional[float] = None) -> int:
    """Upper bound on serious LBALS iterations in the fixed-tolerance regime.

    ``floor((f(x0) - f_l) / (c * nu * min(1, gamma*eps/3))) + 1``, evaluated in
    exact rational arithmetic on the decimal values of the inputs.
    """
    if config.f_l is None:
        raise ValueError("serious_iteration_bound needs a lower bound f_l in the config")
    nu = config.nu0 if nu is None else nu

    eps = config.eps0 if eps is None else eps

    def q(v):
        return Fraction(repr(float(v)))

    step_floor = min(Fraction(1), q(config.gamma) * q(eps) / 3)
    value = (q(f_x0) - q(config.f_l)) / (q(config.c) * q(nu) * step_floor)
    return math.floor(value) + 1


_TINY = np.finfo(float).tiny


def _run(problem, config: SolverConfig, method: str, rng: Optional[np.random.Generator],
         target: Optional[Callable[[float], bool]], x0) -> Tuple[RunReport, List[IterationRecord]]:
    config.validate()
    rng = make_rng(config.seed) if rng is None else rng
    oracle = _CountingOracle(problem)
    stats = QPStats()
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(f"start point must have length {problem.n}")
    if not problem.is_differentiable(x):
        raise NondifferentiablePoint(x, "start point is not differentiable")
    m = config.sample_size(problem.n)
    wall0 = time.perf_counter()

    x_start = x.copy()
    f_x = oracle.f(x)
    f_start = f_x
    grad_x = None
    nu, eps = config.nu0, config.eps0
    trace: List[IterationRecord] = []
    nii = dir_iters = serious = perturbations = 0
    k = 0
    stop_reason = None

    if target is not None and target(f_x):
        stop_reason = "target_met"

    while stop_reason is None:
        if not (nu >= config.nu_opt or eps >= config.eps_opt):
            stop_reason = "tolerance_met"
            break
        if eps < _TINY or nu < _TINY:
            # zero tolerances: the schedule has run down to the float floor
            stop_reason = "tolerance_met"
            break
        if k >= config.max_iters:
            stop_reason = "max_iters"
            break
        if grad_x is None:
            grad_x = oracle.grad(x)
        try:
            bundle = build_bundle(problem, x, eps, m, rng, grad=oracle.grad, center_grad=grad_x,
                                  grad_rows=oracle.grad_rows)
        except NondifferentiableSample:
            stop_reason = "nondiff_sample"
            break

        qp_solved = False
        ideal_norm = None
        if method == "gsi":
            res = ideal_direction(bundle)
            ideal_norm = res.g_norm
            if res.g_norm <= nu:
                res = min_norm_qp(bundle, tol=config.qp_tol, stats=stats)
                qp_solved = True
        else:
            res = min_norm_qp(bundle, tol=config.qp_tol, stats=stats)
            qp_solved = True
        g = res.g
        g_norm = res.g_norm
        rec = dict(k=k, x=x.copy(), f_x=f_x, g_norm=g_norm, eps=eps, nu=nu, qp_solved=qp_solved,
                   ideal_norm=ideal_norm)

        if g_norm <= nu:
            trace.append(IterationRecord(direction_kind="none", t=0.0, serious=False,
                                         null_reason="stationarity_shrink", perturbed=False,
                                         f_next=f_x, step_norm=0.0, **rec))
            nu, eps = stationarity_update(nu, eps, config.theta, config.mu)
            k += 1
            continue

        dir_iters += 1
        if not qp_solved:
            nii += 1
        d = normalize(g)
        if config.line_search == "bals":
            ls = bals(oracle.f, x, g, d, config.gamma, config.c, config.max_backtracks, f_x=f_x)
        else:
            ls = lbals(oracle.f, x, g, d, eps, config.gamma, config.c, f_x=f_x)

        if ls.t == 0.0:
            reason = "bals_exhausted" if ls.exhausted else "lbals_null"
            trace.append(IterationRecord(direction_kind=res.kind, t=0.0, serious=False,
                                         null_reason=reason, perturbed=False, f_next=f_x,
                                         step_norm=0.0, backtracks=ls.backtracks, **rec))
            if ls.exhausted:
                eps = config.mu * eps
            k += 1
            continue

        x_new = x + ls.t * d
        f_new = ls.f_new
        perturbed = False
        if not problem.is_differentiable(x_new):
            x_new, f_new = perturb_iterate(problem, x, f_x, ls.t, d, eps, g, config.c, rng, f=oracle.f)
            perturbed = True
            perturbations += 1
        trace.append(IterationRecord(direction_kind=res.kind, t=ls.t, serious=True, null_reason="none",
                                     perturbed=perturbed, f_next=f_new,
                                     step_norm=float(np.linalg.norm(x_new - x)),
                                     backtracks=ls.backtracks, **rec))
        serious += 1
        x, f_x, grad_x = x_new, f_new, None
        k += 1
        if target is not None and target(f_x):
            stop_reason = "target_met"

    wall = time.perf_counter() - wall0
    if target is not None:
        success = stop_reason == "target_met"
    else:
        success = stop_reason == "tolerance_met"
    report = RunReport(
        problem=problem.name,
        n=problem.n,
        method=method,
        seed=config.seed,
        iters=k,
        nii=nii,
        pii=nii / dir_iters if dir_iters else 0.0,
        direction_iters=dir_iters,
        f_eval=oracle.f_eval,
        g_eval=oracle.g_eval,
        qp_count=stats.count,
        qp_time=stats.time,
        serious_count=serious,
        wall_time=wall,
        cpu_time=wall,
        final_f=f_x,
        final_x=x.copy(),
        success=success,
        stop_reason=stop_reason,
        x_start=x_start,
        f_start=f_start,
        config={**config.to_dict(), "method": method, "m": m},
        final_eps=eps,
        final_nu=nu,
        perturbations=perturbations,
        qp_fallbacks=stats.fallbacks,
    )
    return report, trace


def gsi_run(problem, config: SolverConfig, rng: Optional[np.random.Generator] = None,
            target: Optional[Callable[[float], bool]] = None, x0=None):
    """Gradient sampling with ideal directions.

    Parameters
    ----------
    problem : Problem
    config : SolverConfig
    rng : numpy Generator, optional
        Sampling stream; defaults to one seeded with ``config.seed``.
    target : callable, optional
        ``target(f) -> bool``; the run stops with success once it is true.
    x0 : array, optional
        Start point (default ``problem.x0``); must be differentiable.

    Returns
    -------
    (RunReport, list of IterationRecord)
    """
    return _run(problem, config, "gsi", rng, target, x0)


def gs_run(problem, config: SolverConfig, rng: Optional[np.random.Generator] = None,
           target: Optional[Callable[[float], bool]] = None, x0=None):
    """Classic gradient sampling: the min-norm QP is solved at every iteration."""
    return _run(problem, config, "gs", rng, target, x0)


def run(problem, config: SolverConfig, rng=None, target=None, x0=None):
    """Dispatch on ``config.method``."""
    return _run(problem, config, config.method, rng, target, x0)


def write_trace(trace: List[IterationRecord], path, include_x: bool = True) -> None:
    """JSON lines, one iteration record per line."""
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec.to_dict(include_x=include_x)) + "\n")


def read_trace(path) -> List[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
