import math

import numpy as np
import pytest

from gradsamp.linesearch import MAX_BACKTRACKS, bals, lbals, lbals_threshold
from gradsamp.problems import get_problem

from conftest import quadratic_problem


def sq(x):
    return float(x @ x)


def first_accepted_power(accept, gamma, start=0, limit=200):
    """Smallest k >= start with accept(gamma**k), by direct scan."""
    for k in range(start, limit):
        if accept(gamma ** k):
            return k
    return None


class TestBALS:
    def test_quadratic_unit_step(self):
        out = bals(sq, np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([-1.0, 0.0]), 0.5, 1e-6)
        assert out.t == 1.0 and out.backtracks == 0 and out.evaluations == 1
        assert out.f_new - 1.0 < -1e-6 * 2.0

    def test_linear_unit_step(self):
        out = bals(lambda x: float(x[0]), np.zeros(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 0.5, 1e-6)
        assert out.t == 1.0

    def test_tiny_gradient_scalar_oracle(self):
        x = np.array([1e-9, 0.0])
        g = 2 * x
        c, gamma = 1e-6, 0.5
        gn = np.linalg.norm(g)
        # f(x + t d) - f(x) = t^2 - 2e-9 t, sufficient decrease needs < -c t ||g||
        k = first_accepted_power(lambda t: t * t - 2e-9 * t < -c * t * gn, gamma)
        out = bals(sq, x, g, np.array([-1.0, 0.0]), gamma, c)
        assert k is not None and k < MAX_BACKTRACKS
        assert out.t == gamma ** k and out.backtracks == k and out.evaluations == k + 1

    def test_exhaustion(self):
        # an uphill direction never satisfies the condition
        out = bals(sq, np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 0.0]), 0.5, 1e-6)
        assert out.exhausted and out.t == 0.0
        assert out.backtracks == MAX_BACKTRACKS and out.evaluations == MAX_BACKTRACKS
        out = bals(sq, np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 0.0]), 0.5, 1e-6,
                   max_backtracks=7)
        assert out.evaluations == 7

    def test_steps_are_powers_and_satisfy_armijo(self):
        rng = np.random.default_rng(0)
        p = get_problem("chained_crescent_2", 10)
        for _ in range(50):
            x = p.x0 + rng.standard_normal(10)
            g = p.grad(x)
            d = -g / np.linalg.norm(g)
            out = bals(p, x, g, d, 0.5, 1e-4)
            if out.t > 0:
                k = round(-math.log2(out.t))
                assert out.t == 0.5 ** k
                assert p.f(x + out.t * d) - p.f(x) < -1e-4 * out.t * np.linalg.norm(g)

    def test_accepts_problem_and_reuses_fx(self):
        p = quadratic_problem(2)
        calls = []

        def f(y):
            calls.append(1)
            return p.f(y)

        bals(f, np.ones(2), np.ones(2), -np.ones(2) / np.sqrt(2), 0.5, 1e-6, f_x=1.0)
        assert len(calls) == 1
        out = bals(p, np.ones(2), np.ones(2), -np.ones(2) / np.sqrt(2), 0.5, 1e-6)
        assert out.t == 1.0


class TestLBALS:
    def test_threshold_above_one_is_null(self):
        gamma = 0.5
        eps = 6 / gamma  # gamma * eps / 3 = 2, threshold min(1, 2) = 1
        assert lbals_threshold(eps, gamma) == 1.0
        calls = []
        out = lbals(lambda y: calls.append(1) or sq(y), np.array([1.0, 0.0]), np.array([2.0, 0.0]),
                    np.array([-1.0, 0.0]), eps, gamma, 1e-6, f_x=1.0)
        assert out.t == 0.0 and out.null_step and out.evaluations == 0 and not calls

    def test_strict_guard_at_boundary(self):
        # gamma * eps / 3 = 1 exactly: t = 1 is not tried
        out = lbals(lambda x: float(x[0]), np.zeros(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                    6.0, 0.5, 1e-6, f_x=0.0)
        assert out.null_step
        # just below the boundary t = 1 is tried and accepted
        out = lbals(lambda x: float(x[0]), np.zeros(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                    5.999, 0.5, 1e-6, f_x=0.0)
        assert out.t == 1.0

    def test_threshold_at_half_tries_only_unit_step(self):
        # threshold 0.5: t = 1 tried, t = 0.5 is not
        calls = []
        out = lbals(lambda y: calls.append(1) or sq(y), np.array([1.0, 0.0]), np.array([2.0, 0.0]),
                    np.array([1.0, 0.0]), 3.0, 0.5, 1e-6, f_x=1.0)
        assert out.null_step and len(calls) == 1

    def test_linear_accepts_unit_step(self):
        out = lbals(lambda x: float(x[0]), np.zeros(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]),
                    0.3, 0.5, 1e-6)
        assert out.t == 1.0 and not out.null_step

    def test_tiny_gradient_passes_threshold(self):
        x = np.array([1e-9, 0.0])
        g = 2 * x
        eps, gamma, c = 0.1, 0.5, 1e-6
        thr = lbals_threshold(eps, gamma)
        assert thr == pytest.approx(0.1 * 0.5 / 3)
        k = first_accepted_power(lambda t: t * t - 2e-9 * t < -c * t * np.linalg.norm(g), gamma)
        assert gamma ** k <= thr  # oracle: acceptance happens only below the threshold
        out = lbals(sq, x, g, np.array([-1.0, 0.0]), eps, gamma, c)
        assert out.t == 0.0 and out.null_step
        trials = first_accepted_power(lambda t: t <= thr, gamma)
        assert out.evaluations == trials

    def test_positive_steps_respect_floor(self):
        rng = np.random.default_rng(1)
        p = get_problem("maxq", 6)
        for _ in range(50):
            x = p.x0 + rng.standard_normal(6)
            g = p.grad(x)
            d = -g / np.linalg.norm(g)
            eps = float(rng.uniform(0.01, 10))
            out = lbals(p, x, g, d, eps, 0.5, 0.1)
            thr = lbals_threshold(eps, 0.5)
            assert out.t == 0.0 or out.t > thr
            if out.t > 0:
                assert p.f(x + out.t * d) - p.f(x) < -0.1 * out.t * np.linalg.norm(g)
