import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kei.core import check_feasible, stats
from kei.experiments import _fewest_suppressants
from kei.generator import SPARSE_POOL, GeneratorConfig, generate_pool
from kei.oracle import oracle_optimum
from kei.picef import extract_solution, picef_model
from kei.schemes import WeightScheme
from kei.solver import BranchAndBound, HighsBackend, SolveStatus, solve_exact, solve_ilp

from randinst import random_instance


def test_three_cycle(three_cycle):
    for h, want in ((0, 0), (1, 0), (2, 3), (None, 3)):
        out = solve_ilp(three_cycle, 3, 3, h)
        assert out.objective == want and out.result.status is SolveStatus.OPTIMAL


def test_backends_agree_with_oracle():
    rng = random.Random(17)
    for seed in range(60):
        inst = random_instance(3000 + seed, n_max=8)
        D, L, h = rng.choice([2, 3]), rng.choice([0, 1, 2, 3]), rng.randint(0, 3)
        scheme = WeightScheme.of(rng.choice(["max-tr", "lex-tr-neg-hc", "lex-co-tr"]))
        want = oracle_optimum(inst, scheme, h=h, cycle_cap=D, chain_cap=L).score
        for backend in ("bnb", "highs"):
            out = solve_ilp(inst, D, L, h, scheme, backend=backend)
            assert out.objective == want, (seed, backend)
            check_feasible(inst, out.allocation)
            assert stats(inst, out.allocation).HC <= h


def test_bound_is_admissible():
    bnb = BranchAndBound()
    for seed in range(25):
        inst = random_instance(500 + seed, n_max=6, p_compat=0.3, p_half=0.3)
        model = picef_model(inst, 3, 2, seed % 3)
        for bound, best in bnb.exhaustive(model):
            assert bound >= best


def test_determinism():
    inst = random_instance(77, n_max=8, p_compat=0.35)
    model = picef_model(inst, 3, 3, 2)
    a = solve_exact(model)
    b = solve_exact(model)
    assert a.assignment == b.assignment and a.nodes == b.nodes and a.objective == b.objective


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_incumbent_never_decreases(seed):
    model = picef_model(random_instance(seed, n_max=8, p_compat=0.35), 3, 3, 2)
    res = solve_exact(model)
    values = [v for _, _, v in res.trajectory]
    assert values == sorted(values)
    assert values[-1] == res.objective


def test_node_limit_reports_gap():
    inst = generate_pool(GeneratorConfig(n_vertices=40, alpha=0.2, seed=0, **SPARSE_POOL))
    model = picef_model(inst, 3, 3, 2)
    res = solve_exact(model, node_limit=3)
    assert res.status is SolveStatus.FEASIBLE
    assert res.bound >= res.objective and res.gap >= 0
    extract_solution(model, res.assignment, inst)  # incumbent is feasible


def test_reweighted_model_is_solved_as_written():
    for seed in range(30):
        inst = random_instance(900 + seed, n_max=7, p_half=0.4)
        model = _fewest_suppressants(picef_model(inst, 3, 2, 2))
        a = solve_exact(model, backend="bnb")
        b = solve_exact(model, backend="highs")
        assert a.objective == b.objective


def test_empty_model():
    from kei.core import KeiInstance

    model = picef_model(KeiInstance.build(0, 0, []), 3, 3, 0)
    for backend in (BranchAndBound(), HighsBackend()):
        res = solve_exact(model, backend=backend)
        assert res.objective == 0 and res.optimal


def test_unknown_backend():
    with pytest.raises(KeyError):
        solve_exact(picef_model(random_instance(1), 3, 3, 0), backend="nope")
