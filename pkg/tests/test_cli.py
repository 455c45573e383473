import json

import pytest

from gradsamp.bench import CSV_COLUMNS
from gradsamp.cli import cli_main


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv("GRADSAMP_OUTPUT_DIR", raising=False)
    return tmp_path


def test_list_problems(capsys):
    assert cli_main(["list-problems"]) == 0
    text = capsys.readouterr().out
    assert "chained_lq" in text and "mifflin2" in text
    assert cli_main(["list-problems", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert any(r["name"] == "maxq" for r in rows)


def test_solve_maxq(out, capsys):
    code = cli_main(["solve", "--problem", "maxq", "--n", "50", "--method", "gsi", "--seed", "7",
                     "--out", str(out), "--json"])
    report = json.loads(capsys.readouterr().out)
    assert code == (0 if report["success"] else 1)
    assert report["seed"] == 7 and report["config"]["m"] == 100 and report["config"]["seed"] == 7
    assert (out / "maxq_n50_gsi_s7.json").exists() and (out / "maxq_n50_gsi_s7.jsonl").exists()


def test_solve_twice_identical_trace(out):
    for d in ("a", "b"):
        assert cli_main(["solve", "--problem", "wolfe", "--seed", "3", "--out", str(out / d)]) == 0
    assert (out / "a" / "wolfe_n2_gsi_s3.jsonl").read_text() == (out / "b" / "wolfe_n2_gsi_s3.jsonl").read_text()


def test_solver_failure_exit_code(out):
    assert cli_main(["solve", "--problem", "maxq", "--n", "200", "--max-iters", "3", "--out", str(out)]) == 1


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("GRADSAMP_OUTPUT_DIR", str(tmp_path / "env"))
    assert cli_main(["solve", "--problem", "ql", "--seed", "1"]) == 0
    assert (tmp_path / "env" / "ql_n2_gsi_s1.json").exists()


def test_config_file_and_override(out):
    cfg = out / "cfg.json"
    cfg.write_text(json.dumps({"problem": "ql", "seed": 4, "solver": {"max_iters": 2}}))
    assert cli_main(["solve", "--config", str(cfg), "--out", str(out)]) == 1
    assert cli_main(["solve", "--config", str(cfg), "--max-iters", "2000", "--out", str(out)]) == 0
    report = json.loads((out / "ql_n2_gsi_s4.json").read_text())
    assert report["config"]["max_iters"] == 2000


@pytest.mark.parametrize("argv", [
    [],
    ["solve"],
    ["solve", "--problem", "nope"],
    ["solve", "--problem", "ql", "--mu", "2"],
    ["solve", "--problem", "ql", "--n", "5"],
    ["bench", "--problems", "nope"],
    ["profile"],
    ["frobnicate"],
])
def test_usage_errors(argv, out, capsys):
    assert cli_main(argv + (["--out", str(out)] if argv and argv[0] in ("solve", "bench") else [])) == 2
    assert "usage" in capsys.readouterr().err


def test_bench_and_profile(out):
    assert cli_main(["bench", "--scale", "small", "--problems", "ql,wolfe", "--runs", "5", "--workers", "1",
                     "--out", str(out / "b")]) == 0
    lines = (out / "b" / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    rows = [l.split(",") for l in lines[1:]]
    assert len(rows) == 2 * 2 * 5
    for prob in ("ql", "wolfe"):
        for m in ("gs", "gsi"):
            assert sum(r[0] == prob and r[1] == m for r in rows) == 5
    assert cli_main(["profile", "--metric", "qp_time", "--input", str(out / "b" / "results.csv"),
                     "--out", str(out / "p")]) == 0
    assert (out / "p" / "profile_qp_time.csv").exists() and (out / "p" / "profile_qp_time.svg").exists()
