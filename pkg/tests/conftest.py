import numpy as np
import pytest

from gradsamp.problems import Problem


def quadratic_problem(n=2, x0=None):
    """f(x) = 1/2 ||x||^2, smooth everywhere."""
    return Problem(
        name="half_sq_norm",
        n=n,
        f=lambda x: 0.5 * float(x @ x),
        grad=lambda x: np.array(x, dtype=float),
        f_star=0.0,
        x0=np.ones(n) if x0 is None else np.asarray(x0, dtype=float),
        convex=True,
    )


def abs_first_problem():
    """f(x) = |x1| on R^2, kink on the x2 axis."""
    return Problem(
        name="abs_first",
        n=2,
        f=lambda x: abs(float(x[0])),
        grad=lambda x: np.array([np.sign(x[0]), 0.0]),
        f_star=0.0,
        x0=np.array([1.0, 0.0]),
        nondiff_test=lambda x: bool(x[0] == 0.0),
        convex=True,
    )


def central_difference(f, x, h=1e-6):
    n = x.size
    out = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


@pytest.fixture
def quad2():
    return quadratic_problem(2)
