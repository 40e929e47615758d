import pytest

from kei.core import Allocation, KeiInstance
from kei.oracle import OracleTooLargeError, enumerate_allocations, oracle_optimum
from kei.schemes import WeightScheme

from randinst import random_instance


def test_three_cycle_allocations(three_cycle):
    allocs = list(enumerate_allocations(three_cycle, h=2))
    assert len(allocs) == 2
    assert Allocation.empty() in allocs
    assert {0: 1, 1: 2, 2: 0} in [a.assignment for a in allocs]


def test_three_cycle_budget_one(three_cycle):
    assert list(enumerate_allocations(three_cycle, h=1)) == [Allocation.empty()]


def test_empty_instance():
    assert list(enumerate_allocations(KeiInstance.build(0, 0, []))) == [Allocation.empty()]


def test_optimum_three_cycle(three_cycle):
    res = oracle_optimum(three_cycle, WeightScheme.of("max-tr"), h=2)
    assert res.objective == (3,) and res.count == 1
    assert oracle_optimum(three_cycle, WeightScheme.of("max-co-bm")).objective == (0,)


def test_baseline_instances_never_use_half_edges():
    for seed in range(30):
        inst = random_instance(seed, n_max=6, p_half=0.0)
        res = oracle_optimum(inst, WeightScheme.of("lex-tr-neg-hc"))
        assert res.objective[1] == 0


def test_refuses_large_instances():
    inst = KeiInstance.build(11, 11, [(i, i) for i in range(11)])
    with pytest.raises(OracleTooLargeError):
        list(enumerate_allocations(inst))


def test_caps_restrict_structures(three_cycle):
    assert list(enumerate_allocations(three_cycle, cycle_cap=2)) == [Allocation.empty()]


def test_chain_from_altruist():
    # altruist d1 -> r0, whose donor d0 -> nobody
    inst = KeiInstance.build(1, 2, [(0, 0)], compat={0: [1]})
    assert len(list(enumerate_allocations(inst, chain_cap=1))) == 2
    assert list(enumerate_allocations(inst, chain_cap=0)) == [Allocation.empty()]


def test_results_do_not_depend_on_enumeration_order():
    for seed in range(20):
        inst = random_instance(seed, n_max=6)
        allocs = list(enumerate_allocations(inst))
        keys = [tuple(sorted(a.assignment.items())) for a in allocs]
        assert len(keys) == len(set(keys))
