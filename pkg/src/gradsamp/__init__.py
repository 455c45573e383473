"""Gradient sampling solvers for nonsmooth, nonconvex unconstrained minimization.

Two methods share one driver: classic gradient sampling (GS), which solves a
minimum-norm quadratic program at every iteration, and the ideal-direction
variant (GSI), which only solves it when the cheap componentwise direction is
too short to rule out approximate stationarity.
"""

from gradsamp.direction import DirectionResult, ideal_vector, min_norm_qp, normalize
from gradsamp.linesearch import LineSearchOutcome, bals, lbals
from gradsamp.problems import Problem, evaluate, get_problem, gradient, list_problems
from gradsamp.sampling import GradientBundle, build_bundle, make_rng, sample_unit_ball
from gradsamp.solver import (
    IterationRecord,
    RunReport,
    SolverConfig,
    gs_run,
    gsi_run,
    run,
    serious_iteration_bound,
    write_trace,
)

__all__ = [
    "DirectionResult",
    "GradientBundle",
    "IterationRecord",
    "LineSearchOutcome",
    "Problem",
    "RunReport",
    "SolverConfig",
    "bals",
    "build_bundle",
    "evaluate",
    "get_problem",
    "gradient",
    "gs_run",
    "gsi_run",
    "ideal_vector",
    "lbals",
    "list_problems",
    "make_rng",
    "min_norm_qp",
    "normalize",
    "run",
    "sample_unit_ball",
    "serious_iteration_bound",
    "write_trace",
]

__version__ = "0.1.0"
