import csv
import json

import pytest

from kei import experiments
from kei.experiments import (
    NA,
    RESULT_COLUMNS,
    ExperimentSpec,
    SpecError,
    budget_curve,
    load_spec,
    render_svg,
    run_sweep,
    summarize,
)
from kei.generator import SPARSE_POOL, GeneratorConfig, generate_pool
from kei.solver import solve_ilp

SMALL = dict(sizes=(16,), alphas=(0.3,), h_max=4, replicates=2, generator=SPARSE_POOL)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_three_cycle_curve(three_cycle):
    points = budget_curve(three_cycle, [0, 1, 2], cycle_cap=3, chain_cap=3)
    assert [points[h].value for h in (0, 1, 2)] == [0, 0, 3]
    assert points[2].suppressants == 2


@pytest.mark.parametrize("backend", ["bnb", "highs"])
def test_inferred_curve_matches_direct_solves(backend):
    inst = generate_pool(GeneratorConfig(n_vertices=14, alpha=0.4, seed=5, **SPARSE_POOL))
    budgets = list(range(6))
    points = budget_curve(inst, budgets, 3, 3, backend=backend)
    direct = [solve_ilp(inst, 3, 3, h, backend="highs").objective for h in budgets]
    assert [points[h].value for h in budgets] == direct
    assert all(points[h].suppressants <= h for h in budgets)


def test_plateau_past_half_edge_count():
    inst = generate_pool(GeneratorConfig(n_vertices=12, alpha=0.1, seed=1, **SPARSE_POOL))
    n_half = sum(len(h) for h in inst.half)
    points = budget_curve(inst, [n_half, n_half + 1, n_half + 5], 3, 3)
    assert len({p.value for p in points.values()}) == 1


def test_single_budget_single_row(tmp_path):
    spec = ExperimentSpec(sizes=(12,), alphas=(0.2,), h_max=0, replicates=1)
    report = run_sweep(spec, tmp_path)
    assert report.ok and len(report.rows) == 1
    assert report.rows[0]["pct_baseline"] in ("0.0000", NA)


def test_sweep_outputs(tmp_path):
    spec = ExperimentSpec(**SMALL, extra_budgets=(10,))
    report = run_sweep(spec, tmp_path)
    assert report.ok
    rows = read_rows(tmp_path / "results.csv")
    assert tuple(rows[0]) == RESULT_COLUMNS
    assert len(rows) == 2 * 6
    for seed in ("0", "1"):
        ms = [int(r["M_h"]) for r in rows if r["seed"] == seed]
        assert ms == sorted(ms)
        base = [r for r in rows if r["seed"] == seed and r["h"] == "0"][0]
        assert base["pct_baseline"] in ("0.0000", NA)
    summary = read_rows(tmp_path / "summary.csv")
    assert [s["category_budget"] for s in summary if s["h"] in ("0", "10")] == ["yes", "yes"]
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert any("D=3" in a for a in meta["assumptions"])
    assert (tmp_path / "curves.svg").read_text().startswith("<svg")


def test_sweep_is_byte_identical(tmp_path):
    spec = ExperimentSpec(**SMALL)
    run_sweep(spec, tmp_path / "a")
    run_sweep(spec, tmp_path / "b")
    for name in ("results.csv", "summary.csv", "curves.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_workers_match_serial(tmp_path):
    run_sweep(ExperimentSpec(**SMALL), tmp_path / "a")
    run_sweep(ExperimentSpec(**SMALL, workers=2), tmp_path / "b")
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()


def test_resume_keeps_finished_pools(tmp_path, monkeypatch):
    spec = ExperimentSpec(**SMALL)
    run_sweep(spec, tmp_path)
    full = (tmp_path / "results.csv").read_bytes()
    lines = full.decode().splitlines(keepends=True)
    (tmp_path / "results.csv").write_text("".join(lines[: 1 + 5 + 2]))  # header, pool 0, part of pool 1
    calls = []
    real = experiments.run_task
    monkeypatch.setattr(experiments, "run_task", lambda *a: calls.append(a[1:]) or real(*a))
    run_sweep(spec, tmp_path, resume=True)
    assert calls == [(16, 0.3, 1)]
    assert (tmp_path / "results.csv").read_bytes() == full


def test_failing_pool_is_flagged(tmp_path, monkeypatch):
    real = experiments.generate_pool

    def flaky(cfg):
        if cfg.seed == 1:
            raise RuntimeError("boom")
        return real(cfg)

    monkeypatch.setattr(experiments, "generate_pool", flaky)
    report = run_sweep(ExperimentSpec(**SMALL), tmp_path)
    assert not report.ok and report.errors == 1
    statuses = {r["seed"]: r["status"] for r in read_rows(tmp_path / "results.csv")}
    assert statuses["1"] == "error" and statuses["0"] == "optimal"


def row(seed, h, m, pct, status="optimal"):
    base = {c: NA for c in RESULT_COLUMNS}
    base.update(size="64", alpha="0.2", seed=str(seed), h=str(h), M_h=str(m), pct_baseline=pct, status=status)
    return base


def test_summary_single_replicate():
    (p,) = summarize([row(0, 3, 12, "50.0000")])
    assert p.median == p.low == p.high == 50.0 and p.replicates == 1


def test_summary_excludes_na_baselines():
    pts = summarize([row(0, 0, 0, NA), row(1, 0, 4, "0.0000"), row(2, 0, 0, NA)])
    assert pts[0].replicates == 1 and pts[0].median == 0.0


def test_summary_all_na():
    (p,) = summarize([row(0, 2, 0, NA)])
    assert p.median is None and p.replicates == 0
    assert "<svg" in render_svg([p])


def test_band_contains_median():
    rows = [row(s, h, 10 + s * h, f"{s * h * 10.0:.4f}") for s in range(10) for h in range(5)]
    for p in summarize(rows):
        assert p.low <= p.median <= p.high


def test_errors_are_left_out_of_summary():
    pts = summarize([row(0, 1, 5, "25.0000"), row(1, 1, 0, NA, status="error")])
    assert pts[0].replicates == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        {"h_max": -1},
        {"replicates": 0},
        {"backend": "cplex"},
        {"generator": {"alpha": 0.3}},
        {"generator": {"crossmatch_pass": 2.0}},
        {"seeds": (1, 2), "replicates": 3},
    ],
)
def test_invalid_spec(kwargs):
    with pytest.raises((SpecError, ValueError)):
        ExperimentSpec(**kwargs)


def test_spec_file(tmp_path):
    spec = ExperimentSpec(**SMALL, seeds=(5, 9))
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec.to_json()))
    loaded = load_spec(path)
    assert loaded == spec and loaded.seed_list == (5, 9)
    with pytest.raises(SpecError):
        ExperimentSpec.from_json({**spec.to_json(), "version": 7})
