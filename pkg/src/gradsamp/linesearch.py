"""Backtracking Armijo line searches along normalized directions.

Both searches start from ``t = 1`` and shrink by ``gamma``; a trial is
accepted when ``f(x + t d) - f(x) < -c t ||g||``. The limited variant gives
up (``t = 0``) once ``t`` drops to ``min(1, gamma * eps / 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

MAX_BACKTRACKS = 50


@dataclass
class LineSearchOutcome:
    t: float
    backtracks: int
    f_new: Optional[float]
    evaluations: int
    exhausted: bool = False
    null_step: bool = False


def _objective(problem) -> Callable[[np.ndarray], float]:
    if callable(problem):
        return problem
    from gradsamp.problems import evaluate

    return lambda y: evaluate(problem, y)


def bals(problem, x, g, d, gamma: float, c: float, max_backtracks: int = MAX_BACKTRACKS,
         f_x: Optional[float] = None) -> LineSearchOutcome:
    """Backtracking Armijo line search with a cap on the number of trials.

    ``problem`` may be a :class:`~gradsamp.problems.Problem` or a plain
    callable. ``f_x`` is reused when given. On exhaustion ``t`` is 0 and
    ``exhausted`` is set; the caller decides how to recover.
    """
    f = _objective(problem)
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if f_x is None:
        f_x = f(x)
    slope = c * float(np.linalg.norm(g))
    t = 1.0
    for trial in range(max_backtracks):
        f_t = f(x + t * d)
        if f_t - f_x < -slope * t:
            return LineSearchOutcome(t=t, backtracks=trial, f_new=f_t, evaluations=trial + 1)
        t *= gamma
    return LineSearchOutcome(t=0.0, backtracks=max_backtracks, f_new=None,
                             evaluations=max_backtracks, exhausted=True)


def lbals_threshold(eps: float, gamma: float) -> float:
    return min(1.0, gamma * eps / 3.0)


def lbals(problem, x, g, d, eps: float, gamma: float, c: float,
          f_x: Optional[float] = None) -> LineSearchOutcome:
    """Limited backtracking: trials only while ``t > min(1, gamma*eps/3)``.

    The guard is strict, so with ``gamma*eps/3 >= 1`` not even ``t = 1`` is
    tried and the result is a null step.
    """
    f = _objective(problem)
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if f_x is None:
        f_x = f(x)
    slope = c * float(np.linalg.norm(g))
    floor = lbals_threshold(eps, gamma)
    t = 1.0
    trials = 0
    while t > floor:
        f_t = f(x + t * d)
        trials += 1
        if f_t - f_x < -slope * t:
            return LineSearchOutcome(t=t, backtracks=trials - 1, f_new=f_t, evaluations=trials)
        t *= gamma
    return LineSearchOutcome(t=0.0, backtracks=trials, f_new=None, evaluations=trials, null_step=True)
