import csv
import json

import pytest

from kei.cli import build_parser, main
from kei.core import load_instance, save_instance


@pytest.fixture
def cycle_file(tmp_path, three_cycle):
    path = tmp_path / "cycle.json"
    save_instance(three_cycle, path)
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve(capsys, cycle_file):
    code, out, _ = run(capsys, "solve", "--instance", cycle_file, "--scheme", "max-tr")
    data = json.loads(out)
    assert code == 0 and data["stats"] == {"CO": 1, "HC": 2, "TR": 3}


def test_solve_budget_needs_silver_bullet(capsys, cycle_file):
    code, _, err = run(capsys, "solve", "--instance", cycle_file, "--scheme", "max-tr", "--budget", "1")
    assert code == 2 and "Silver Bullet" in err


def test_solve_budget_on_silver_pool(capsys, tmp_path, silver_pool):
    path = tmp_path / "sb.json"
    save_instance(silver_pool, path)
    code, out, _ = run(capsys, "solve", "--instance", path, "--scheme", "lex-co-neg-hc", "--budget", "2")
    assert code == 0 and json.loads(out)["suppressants"] <= 2


def test_custom_scheme_file(capsys, tmp_path, cycle_file):
    gains = tmp_path / "gains.json"
    gains.write_text(json.dumps({"kind": "custom", "compatible": 5, "half": 1}))
    code, out, _ = run(
        capsys, "solve", "--instance", cycle_file, "--scheme", "custom", "--scheme-file", gains
    )
    assert code == 0 and json.loads(out)["weight"] == 7
    code, _, err = run(capsys, "solve", "--instance", cycle_file, "--scheme", "custom")
    assert code == 2 and "--scheme-file" in err


@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_ilp_solve(capsys, tmp_path, cycle_file, backend):
    lp, trace = tmp_path / "m.lp", tmp_path / "t.csv"
    argv = ["ilp-solve", "--instance", cycle_file, "--cycle-cap", 3, "--chain-cap", 3, "--budget", 2]
    code, out, _ = run(capsys, *argv, "--backend", backend, "--lp", lp, "--trace", trace)
    data = json.loads(out)
    assert code == 0 and data["objective"] == 3 and data["status"] == "optimal"
    assert data["cycles"] == [[0, 2, 1]] and data["suppressants"] == 2
    assert "budget" in lp.read_text()
    with open(trace, newline="") as fh:
        assert next(csv.reader(fh)) == ["node", "seconds", "incumbent"]


def test_ilp_solve_budget_one(capsys, cycle_file):
    argv = ["ilp-solve", "--instance", cycle_file, "--cycle-cap", 3, "--chain-cap", 0, "--budget", 1]
    code, out, _ = run(capsys, *argv)
    assert json.loads(out)["objective"] == 0


def test_time_limit_env(capsys, cycle_file, monkeypatch):
    monkeypatch.setenv("KEI_TIME_LIMIT", "5")
    code, out, _ = run(capsys, "ilp-solve", "--instance", cycle_file, "--cycle-cap", 3, "--chain-cap", 3)
    assert code == 0 and json.loads(out)["objective"] == 3


def test_gen(capsys, tmp_path):
    out = tmp_path / "inst.json"
    assert run(capsys, "gen", "--n", 64, "--alpha", 0.2, "--seed", 7, "--out", out)[0] == 0
    inst = load_instance(out)
    assert inst.n + len(inst.altruists()) == 64
    again = tmp_path / "again.json"
    run(capsys, "gen", "--n", 64, "--alpha", 0.2, "--seed", 7, "--out", again)
    assert out.read_bytes() == again.read_bytes()
    sparse = tmp_path / "sparse.json"
    run(capsys, "gen", "--n", 64, "--seed", 7, "--preset", "sparse", "--out", sparse)
    assert load_instance(sparse) != load_instance(out)


def test_sweep(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"version": 1, "sizes": [12], "h_max": 2, "replicates": 1}))
    code, _, _ = run(capsys, "sweep", "--spec", spec, "--out-dir", tmp_path / "out")
    assert code == 0
    assert {p.name for p in (tmp_path / "out").iterdir()} >= {"results.csv", "summary.csv", "curves.svg"}


def test_export_and_dot(capsys, cycle_file):
    code, out, _ = run(capsys, "export-budgeted", "--instance", cycle_file, "--budget", 2, "--target", 6)
    assert code == 0 and json.loads(out)["problem"] == "unit-cost-budgeted-matching"
    code, out, _ = run(capsys, "dot", "--instance", cycle_file, "--solve")
    assert code == 0 and "penwidth=3" in out


def test_hidden_oracle(capsys, cycle_file):
    assert "oracle" not in build_parser().format_help()
    code, out, _ = run(capsys, "oracle", "--instance", cycle_file, "--budget", 2)
    assert code == 0 and json.loads(out)["objective"] == [3]


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--instance", tmp_path / "nope.json", "--scheme", "max-tr")
    assert code == 2 and err.startswith("kei: error")
