import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kei.core import Allocation, KeiInstance, ModelClassError, check_feasible
from kei.graph import (
    EdgeKind,
    Vertex,
    add_suppressant_gadget,
    build_graph,
    matching_to_allocation,
    restrict_compatible_pairs,
    to_dot,
)
from kei.matching import max_weight_perfect_matching
from kei.schemes import WeightScheme

from randinst import random_instance

MAX_TR = WeightScheme.of("max-tr")


def _pairs(g, kind):
    return {(str(e.left), str(e.right)) for e in g.edges_of(kind)}


def test_mixed_pool_graph(mixed_pool):
    g = build_graph(mixed_pool, MAX_TR)
    assert len(g.left) == len(g.right) == 5
    assert g.vertices("R0") == [Vertex("R0", 3)]
    assert g.vertices("D0") == [Vertex("D0", 0)]
    assert len(g.edges_of(EdgeKind.PRIVATE)) == 5
    assert _pairs(g, EdgeKind.DUMMY) == {("r0_3", f"d{j}") for j in range(3)} | {("r0_3", "d0_0")}
    assert _pairs(g, EdgeKind.COMPATIBLE) == {("r0", "d0"), ("r1", "d2")}
    assert _pairs(g, EdgeKind.HALF) == {("r1", "d0"), ("r1", "d1"), ("r2", "d2"), ("r3", "d1"), ("r3", "d3")}


def test_empty_graph():
    g = build_graph(KeiInstance.build(0, 0, []), MAX_TR)
    assert g.left == g.right == g.edges == ()


def test_own_compatible_pair_has_parallel_edges():
    inst = KeiInstance.build(1, 1, [(0, 0)], compat={0: [0]})
    g = build_graph(inst, MAX_TR)
    assert [(e.kind, str(e.left), str(e.right)) for e in g.edges] == [
        (EdgeKind.PRIVATE, "r0", "d0"),
        (EdgeKind.COMPATIBLE, "r0", "d0"),
    ]


def test_forbidden_half_edges_are_omitted(mixed_pool):
    g = build_graph(mixed_pool, WeightScheme.of("max-co-bm"))
    assert not g.edges_of(EdgeKind.HALF)


def test_restrict_compatible_pairs():
    inst = KeiInstance.build(2, 2, [(0, 0), (1, 1)], compat={0: [0]}, half={0: [1], 1: [0]})
    g = restrict_compatible_pairs(build_graph(inst, MAX_TR), inst)
    assert _pairs(g, EdgeKind.HALF) == {("r1", "d0")}


def test_restrict_without_own_compatible_pairs_is_identity(mixed_pool):
    g = build_graph(mixed_pool, MAX_TR)
    assert restrict_compatible_pairs(g, mixed_pool) == g


def test_gadget_on_silver_pool(silver_pool):
    g = add_suppressant_gadget(build_graph(silver_pool, MAX_TR), 2)
    assert g.vertices("A") == [Vertex("A", 0), Vertex("A", 1)]
    assert g.vertices("B") == [Vertex("B", 0), Vertex("B", 1)]
    assert len(g.left) == len(g.right)
    assert not g.edges_of(EdgeKind.HALF)
    assert _pairs(g, EdgeKind.GADGET_LINK) == {("b0", "a0"), ("b1", "a1")}
    gadget = _pairs(g, EdgeKind.GADGET)
    assert {(f"r{r}", f"a{k}") for r in range(4) for k in range(2)} <= gadget
    assert {(f"b{k}", f"d{d}") for d in range(4) for k in range(2)} <= gadget
    assert g.scale == 2


def test_gadget_zero_budget_has_no_slots(silver_pool):
    g = add_suppressant_gadget(build_graph(silver_pool, MAX_TR), 0)
    assert not g.vertices("A") and not g.edges_of(EdgeKind.HALF)


def test_gadget_slot_surplus():
    inst = KeiInstance.build(2, 2, [(0, 0), (1, 1)], compat={0: [0, 1], 1: [1]}, half={1: [0]})
    g = add_suppressant_gadget(build_graph(inst, MAX_TR), 3)
    alloc = matching_to_allocation(g, max_weight_perfect_matching(g).edges)
    assert len(g.vertices("A")) == 3
    assert len(alloc.suppressed) <= 1


def test_gadget_rejects_general_instances(three_cycle):
    with pytest.raises(ModelClassError):
        add_suppressant_gadget(build_graph(three_cycle, MAX_TR), 1)
    with pytest.raises(ValueError):
        add_suppressant_gadget(build_graph(three_cycle, MAX_TR), -1)


def test_matching_to_allocation_rejects_partial(three_cycle):
    g = build_graph(three_cycle, MAX_TR)
    with pytest.raises(Exception, match="perfect"):
        matching_to_allocation(g, [0])


def test_private_matching_is_the_empty_allocation(mixed_pool):
    g = build_graph(mixed_pool, MAX_TR)
    idx = [i for i, e in enumerate(g.edges) if e.kind is EdgeKind.PRIVATE]
    assert matching_to_allocation(g, idx) == Allocation.empty()


def test_dot_marks_chosen_edges(three_cycle):
    g = build_graph(three_cycle, MAX_TR)
    text = to_dot(g, [0])
    assert text.startswith("graph exchange {")
    assert text.count("penwidth=3") == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_graph_is_balanced_and_matchings_are_feasible(seed):
    inst = random_instance(seed, n_max=6)
    g = build_graph(inst, MAX_TR)
    assert len(g.left) == len(g.right)
    m = max_weight_perfect_matching(g)
    assert m is not None
    check_feasible(inst, matching_to_allocation(g, m.edges))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 4))
def test_gadget_matchings_respect_budget(seed, h):
    inst = random_instance(seed, n_max=6, sbm=True)
    g = add_suppressant_gadget(build_graph(inst, MAX_TR), h)
    assert len(g.left) == len(g.right)
    alloc = matching_to_allocation(g, max_weight_perfect_matching(g).edges)
    check_feasible(inst, alloc)
    assert len(alloc.suppressed) <= h
