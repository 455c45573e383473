import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gradsamp.direction import (
    QPStats,
    ideal_direction,
    ideal_vector,
    min_norm_qp,
    normalize,
    project_simplex,
    qp_certificate_gap,
)
from gradsamp.errors import ZeroVector


def enumeration_min_norm(G):
    """Minimum norm over the hull by trying every support set.

    For each subset S the affine-hull minimizer is found from the bordered
    normal equations (least squares); feasible (nonnegative) ones are points
    of the hull, and the optimum is among them.
    """
    n, p = G.shape
    best = np.inf
    for k in range(1, p + 1):
        for S in itertools.combinations(range(p), k):
            A = G[:, S]
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = A.T @ A
            K[:k, k] = K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol = np.linalg.lstsq(K, rhs, rcond=None)[0][:k]
            if abs(sol.sum() - 1) > 1e-9 or np.any(sol < -1e-12):
                continue
            best = min(best, float(np.linalg.norm(A @ sol)))
    return best


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestIdealVector:
    def test_identical_columns(self):
        g = np.array([1.5, -2.0, 0.3])
        np.testing.assert_array_equal(ideal_vector(np.tile(g[:, None], (1, 4))), g)

    def test_sign_cancellation(self):
        G = np.array([[1.0, -1.0], [3.0, 5.0]])
        np.testing.assert_array_equal(ideal_vector(G), [0.0, 3.0])

    def test_zero_entry(self):
        G = np.array([[0.0, 2.0, 4.0], [-1.0, -3.0, -2.0]])
        np.testing.assert_array_equal(ideal_vector(G), [0.0, -1.0])

    def test_equal_magnitude_same_sign(self):
        np.testing.assert_array_equal(ideal_vector(np.array([[-2.0, -2.0]])), [-2.0])

    @given(arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 9)), elements=finite))
    @settings(max_examples=200, deadline=None)
    def test_componentwise_hull(self, G):
        g = ideal_vector(G)
        assert np.all(G.min(axis=1) <= g) and np.all(g <= G.max(axis=1))
        # nearest to zero within the interval
        lo, hi = G.min(axis=1), G.max(axis=1)
        expected = np.where((lo <= 0) & (hi >= 0), 0.0, np.where(lo > 0, lo, hi))
        np.testing.assert_array_equal(g, expected)

    @given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 7)), elements=finite),
           st.floats(0.01, 100))
    @settings(max_examples=100, deadline=None)
    def test_scale_equivariance(self, G, a):
        np.testing.assert_allclose(ideal_vector(a * G), a * ideal_vector(G), rtol=1e-12, atol=1e-300)

    def test_direction_absent_for_zero(self):
        r = ideal_direction(np.array([[1.0, -1.0], [2.0, -2.0]]))
        assert r.d is None and r.kind == "ideal"
        r = ideal_direction(np.array([[3.0, 4.0], [4.0, 5.0]]))
        np.testing.assert_allclose(r.d, [-0.6, -0.8])


class TestMinNormQP:
    def test_origin_in_hull(self):
        r = min_norm_qp(np.array([[1.0, -1.0], [0.0, 0.0]]))
        np.testing.assert_allclose(r.g, [0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(r.lam, [0.5, 0.5])
        assert r.d is None

    def test_segment_projection(self):
        r = min_norm_qp(np.eye(2))
        np.testing.assert_allclose(r.g, [0.5, 0.5])
        # brute-force grid over the segment
        lam = np.linspace(0, 1, 10001)
        grid = np.min(np.hypot(lam, 1 - lam))
        assert abs(r.g_norm - grid) < 1e-8
        assert r.g_norm == pytest.approx(np.sqrt(0.5))

    def test_singleton(self):
        r = min_norm_qp(np.array([[2.0], [-1.0]]))
        np.testing.assert_array_equal(r.g, [2.0, -1.0])
        np.testing.assert_array_equal(r.lam, [1.0])

    def test_stats(self):
        stats = QPStats()
        for _ in range(3):
            min_norm_qp(np.eye(3), stats=stats)
        assert stats.count == 3 and stats.time > 0

    def test_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n, p = rng.integers(1, 5), rng.integers(1, 6)
            G = rng.standard_normal((n, p)) + rng.standard_normal((n, 1))
            assert abs(min_norm_qp(G).g_norm - enumeration_min_norm(G)) < 1e-8

    @given(arrays(float, st.tuples(st.integers(1, 10), st.integers(1, 25)), elements=finite))
    @settings(max_examples=150, deadline=None)
    def test_certificate_and_weights(self, G):
        r = min_norm_qp(G)
        assert np.all(r.lam >= 0)
        assert abs(r.lam.sum() - 1) < 1e-10
        np.testing.assert_allclose(G @ r.lam, r.g, atol=1e-8)
        assert qp_certificate_gap(G, r.g) <= 1e-10 * (1 + r.g @ r.g)
        assert r.g_norm <= np.min(np.linalg.norm(G, axis=0)) + 1e-12

    def test_near_duplicate_columns(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            base = rng.standard_normal((20, 5)) + 2.0
            G = np.repeat(base, 8, axis=1) + 1e-9 * rng.standard_normal((20, 40))
            r = min_norm_qp(G)
            assert qp_certificate_gap(G, r.g) <= 1e-10 * (1 + r.g @ r.g)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(2)
        G = rng.standard_normal((6, 9)) + 0.5
        for a in (1e-3, 7.0):
            np.testing.assert_allclose(min_norm_qp(a * G).g, a * min_norm_qp(G).g, rtol=1e-7, atol=1e-12)

    def test_ideal_no_longer_than_min_norm(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            G = rng.standard_normal((8, 12)) + rng.standard_normal((8, 1))
            assert np.linalg.norm(ideal_vector(G)) <= min_norm_qp(G).g_norm + 1e-9


class TestNormalize:
    def test_example(self):
        np.testing.assert_allclose(normalize(np.array([3.0, 4.0])), [-0.6, -0.8])

    def test_zero(self):
        with pytest.raises(ZeroVector):
            normalize(np.zeros(2))

    @given(arrays(float, st.integers(1, 20), elements=finite).filter(lambda g: np.linalg.norm(g) > 1e-100))
    def test_unit(self, g):
        assert abs(np.linalg.norm(normalize(g)) - 1) < 1e-12


def test_project_simplex():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.standard_normal(7) * 3
        w = project_simplex(v)
        assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12
        # optimality: w - v is constant on the support
        s = w > 0
        assert np.ptp((v - w)[s]) < 1e-12
