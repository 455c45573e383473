import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gradsamp.bench import (
    CSV_COLUMNS,
    PROFILE_METRICS,
    StoppingRule,
    emit_reports,
    performance_profile,
    profile_from_csv,
    random_start,
    read_profile_data,
    read_results_csv,
    run_suite,
)
from gradsamp.problems import get_problem
from gradsamp.sampling import make_rng


class TestStoppingRule:
    def test_trigger(self):
        rule = StoppingRule(f_star=-8.0, tol=5e-4)
        assert rule(-8.0 + 0.9 * 5e-4 * 9)
        assert not rule(-8.0 + 1.1 * 5e-4 * 9)
        assert rule.relative_error(-7.0) == pytest.approx(1 / 9)

    def test_unknown_optimum(self):
        assert StoppingRule.for_problem(get_problem("chained_mifflin2", 7)) is None
        assert StoppingRule.for_problem(get_problem("chained_lq", 100)).tol == 1e-3
        assert StoppingRule.for_problem(get_problem("ql")).tol == 5e-4


def test_random_start_in_ball():
    p = get_problem("crescent")
    rng = make_rng(0)
    r = np.linalg.norm(p.x0) / p.n
    for _ in range(50):
        x = random_start(p, rng)
        assert np.linalg.norm(x - p.x0) <= r and p.is_differentiable(x)


class TestProfile:
    def test_one_solver_best_everywhere(self):
        t = performance_profile([[1.0, 2.0, 3.0], [2.0, 4.0, 9.0]], ["a", "b"])
        assert t.rho("a", 1.0) == 1.0 and t.rho("b", 1.0) == 0.0

    def test_ties_count_for_both(self):
        t = performance_profile([[5.0, 2.0], [5.0, 2.0]], ["a", "b"])
        assert t.rho("a", 1.0) == 1.0 and t.rho("b", 1.0) == 1.0

    def test_hand_matrix(self):
        # rows are instances, columns solvers: [[1, 2], [4, 2]]
        M = np.array([[1.0, 2.0], [4.0, 2.0]])
        t = performance_profile(M.T, ["s1", "s2"])
        # s1: ratios 1 and 4/2 = 2; s2: ratios 2 and 1
        np.testing.assert_array_equal(t.curves["s1"], [[1.0, 0.5], [2.0, 1.0]])
        np.testing.assert_array_equal(t.curves["s2"], [[1.0, 0.5], [2.0, 1.0]])
        assert t.rho("s1", 1.5) == 0.5

    def test_failures_and_exclusion(self):
        V = [[1.0, np.nan, np.nan], [2.0, 3.0, np.nan]]
        with pytest.warns(UserWarning):
            t = performance_profile(V, ["a", "b"])
        assert len(t.instances) == 2 and len(t.excluded) == 1
        assert t.rho("a", 1e12) == 0.5  # plateau at the success fraction
        assert t.rho("b", 1.0) == 0.5 and t.rho("b", 2.0) == 1.0

    def test_monotone(self):
        rng = np.random.default_rng(0)
        V = rng.uniform(1, 10, (3, 20))
        V[rng.random((3, 20)) < 0.2] = np.nan
        t = performance_profile(V, ["a", "b", "c"])
        for c in t.curves.values():
            assert np.all(np.diff(c[:, 0]) > 0) and np.all(np.diff(c[:, 1]) >= 0)

    def test_zero_counts(self):
        t = performance_profile([[0.0, 3.0], [4.0, 3.0]], ["gsi", "gs"], metric="qp_count")
        assert t.ratios[0, 0] == 1.0 and t.ratios[1, 0] == 4.0

    def test_needs_two_solvers(self):
        with pytest.raises(ValueError):
            performance_profile([[1.0, 2.0]], ["a"])


@pytest.fixture(scope="module")
def small_suite():
    return run_suite(["ql", "wolfe", "mifflin2"], ["gs", "gsi"], runs_per_problem=3, base_seed=10)


class TestSuite:
    def test_cardinality_and_pairing(self, small_suite):
        assert len(small_suite) == 3 * 2 * 3
        by_key = {}
        for r in small_suite:
            by_key.setdefault((r.problem, r.seed), []).append(r)
        for pair in by_key.values():
            assert len(pair) == 2
            np.testing.assert_array_equal(pair[0].x_start, pair[1].x_start)

    def test_success_consistent_with_rule(self, small_suite):
        for r in small_suite:
            p = get_problem(r.problem)
            if r.success:
                assert abs(r.final_f - p.f_star) / (abs(p.f_star) + 1) < 5e-4
            assert r.qp_time <= r.cpu_time

    def test_emit(self, small_suite, tmp_path):
        paths = emit_reports(small_suite, tmp_path)
        with open(paths["csv"]) as fh:
            assert fh.readline().strip() == ",".join(CSV_COLUMNS)
        rows = read_results_csv(paths["csv"])
        assert len(rows) == len(small_suite)
        assert len(list((tmp_path / "runs").glob("*.json"))) == len(small_suite)
        for metric in PROFILE_METRICS:
            ET.parse(paths[f"svg_{metric}"])
            emitted = read_profile_data(paths[f"profile_{metric}"])
            again = profile_from_csv(paths["csv"], metric)
            for name, curve in again.curves.items():
                np.testing.assert_array_equal(curve, emitted[name])

    def test_deterministic_csv(self, small_suite, tmp_path):
        again = run_suite(["ql", "wolfe", "mifflin2"], ["gs", "gsi"], runs_per_problem=3, base_seed=10)
        emit_reports(small_suite, tmp_path / "a", svg=False)
        emit_reports(again, tmp_path / "b", svg=False)

        def strip(path):
            with open(path) as fh:
                return [{k: v for k, v in row.items() if k not in ("qp_time", "cpu_time")}
                        for row in csv.DictReader(fh)]

        assert strip(tmp_path / "a" / "results.csv") == strip(tmp_path / "b" / "results.csv")

    def test_parallel_matches_serial(self, small_suite):
        par = run_suite(["ql", "wolfe", "mifflin2"], ["gs", "gsi"], runs_per_problem=3, base_seed=10, workers=2)
        assert [(r.problem, r.method, r.seed, r.iters, r.final_f) for r in par] == [
            (r.problem, r.method, r.seed, r.iters, r.final_f) for r in small_suite]

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            run_suite(["ql"], ["newton"])
        with pytest.raises(KeyError):
            run_suite(["nope"], ["gsi"])
        with pytest.raises(ValueError):
            run_suite(["ql"], ["gsi"], overrides={"mu": 3.0})

    def test_failed_run_is_marked(self, monkeypatch):
        import gradsamp.bench as bench

        def boom(spec, trace_dir=None):
            if spec.seed == 1:
                raise RuntimeError("synthetic failure")
            return original(spec, trace_dir)

        original = bench.solve_one
        monkeypatch.setattr(bench, "solve_one", boom)
        reps = run_suite(["ql"], ["gsi"], runs_per_problem=3)
        assert [r.stop_reason == "error" for r in reps] == [False, True, False]
        assert not reps[1].success and "synthetic failure" in reps[1].error
