"""Maximum-weight bipartite matching and the clearing problems built on it."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from .core import (
    Allocation,
    AllocationStats,
    KeiError,
    KeiInstance,
    ModelClassError,
    is_silver_bullet,
    stats,
)
from .graph import (
    EdgeKind,
    ExchangeGraph,
    add_suppressant_gadget,
    build_graph,
    matching_to_allocation,
    restrict_compatible_pairs,
)
from .schemes import SchemeKind, WeightScheme


@dataclass(frozen=True)
class Bipartite:
    """A plain weighted bipartite multigraph on ``n_left + n_right`` vertices."""

    n_left: int
    n_right: int
    edges: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class Matching:
    edges: tuple[int, ...]  # indices into the graph's edge list
    weight: int

    def __len__(self) -> int:
        return len(self.edges)


Graphish = Union[Bipartite, ExchangeGraph]


def _as_triples(g: Graphish) -> tuple[int, int, list[tuple[int, int, int]]]:
    if isinstance(g, ExchangeGraph):
        return g.indexed()
    return g.n_left, g.n_right, list(g.edges)


def _hungarian_min(cost: list[list[int]]) -> list[int]:
    """Square assignment minimizing total cost; returns column of each row.

    Shortest augmenting paths with vertex potentials, O(n^3).
    """
    n = len(cost)
    INF = float("inf")
    u = [0] * (n + 1)
    v = [0] * (n + 1)
    owner = [0] * (n + 1)  # owner[j]: row matched to column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            row = cost[i0 - 1]
            delta = INF
            j1 = 0
            ui0 = u[i0]
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    assign = [0] * n
    for j in range(1, n + 1):
        if owner[j]:
            assign[owner[j] - 1] = j - 1
    return assign


def max_weight_matching(g: Graphish) -> Matching:
    """Maximum total weight matching (not necessarily perfect).

    Parallel edges collapse to the heaviest one (lowest index on ties);
    pairs without an edge, and edges of non-positive weight, act as
    "leave unmatched".
    """
    n_left, n_right, triples = _as_triples(g)
    size = max(n_left, n_right)
    if size == 0:
        return Matching((), 0)
    best: dict[tuple[int, int], int] = {}
    for idx, (a, b, w) in enumerate(triples):
        cur = best.get((a, b))
        if cur is None or w > triples[cur][2]:
            best[(a, b)] = idx
    cost = [[0] * size for _ in range(size)]
    for (a, b), idx in best.items():
        w = triples[idx][2]
        if w > 0:
            cost[a][b] = -w
    assign = _hungarian_min(cost)
    chosen = []
    for a, b in enumerate(assign):
        idx = best.get((a, b))
        if idx is not None and triples[idx][2] > 0:
            chosen.append(idx)
    chosen.sort()
    return Matching(tuple(chosen), sum(triples[i][2] for i in chosen))


def perfectize(g: Graphish) -> Graphish:
    """Shift every weight so larger matchings always weigh more.

    With non-negative weights the shift is ``n * w_max + 1`` (n = number of
    left vertices).  Negative weights need ``2 * n * max|w| + 1``: a matching
    one edge larger can lose up to ``(2k + 1) * max|w|`` of original weight.
    """
    n_left, _, triples = _as_triples(g)
    weights = [w for _, _, w in triples]
    if not weights:
        return g
    if min(weights) >= 0:
        shift = n_left * max(weights) + 1
    else:
        shift = 2 * n_left * max(abs(w) for w in weights) + 1
    shifted = [w + shift for w in weights]
    if isinstance(g, ExchangeGraph):
        return g.with_weights(shifted)
    return Bipartite(g.n_left, g.n_right, tuple((a, b, w) for (a, b, _), w in zip(triples, shifted)))


def is_perfect(g: Graphish, m: Matching) -> bool:
    n_left, n_right, _ = _as_triples(g)
    return n_left == n_right == len(m)


def max_weight_perfect_matching(g: Graphish) -> Optional[Matching]:
    """Max-weight perfect matching with weights reported on the original scale,
    or None if the graph has no perfect matching."""
    _, _, triples = _as_triples(g)
    m = max_weight_matching(perfectize(g))
    if not is_perfect(g, m):
        return None
    return Matching(m.edges, sum(triples[i][2] for i in m.edges))


def _clearing_graph(inst: KeiInstance, scheme: WeightScheme, strict_pairs: bool) -> ExchangeGraph:
    g = build_graph(inst, scheme)
    return restrict_compatible_pairs(g, inst) if strict_pairs else g


def solve_objective(
    inst: KeiInstance, scheme: WeightScheme, strict_pairs: bool = True
) -> tuple[Allocation, AllocationStats]:
    """Optimal allocation for one objective, cycles and chains unbounded."""
    g = _clearing_graph(inst, scheme, strict_pairs)
    m = max_weight_perfect_matching(g)
    if m is None:  # private and dummy edges always form a perfect matching
        raise KeiError("exchange graph has no perfect matching")
    alloc = matching_to_allocation(g, m.edges, inst)
    return alloc, stats(inst, alloc)


def solve_h_all_kei(
    inst: KeiInstance, h: int, strict_pairs: bool = False
) -> Optional[Allocation]:
    """An allocation satisfying every recipient with at most ``h``
    suppressants, or None if there is none."""
    if h < 0:
        raise ValueError(f"budget must be non-negative, got {h}")
    g = _clearing_graph(inst, WeightScheme.of(SchemeKind.MAX_TR), strict_pairs)
    kept = tuple(
        replace(e, weight=1 if e.kind is EdgeKind.COMPATIBLE else 0)
        for e in g.edges
        if not (e.kind is EdgeKind.PRIVATE and e.left.cls == "R")
    )
    reduced = replace(g, edges=kept)
    m = max_weight_perfect_matching(reduced)
    if m is None or m.weight < inst.n - h:
        return None
    return matching_to_allocation(reduced, m.edges, inst)


def solve_h_max_kei_sbm(
    inst: KeiInstance, h: int, scheme: WeightScheme, strict_pairs: bool = True
) -> tuple[Allocation, AllocationStats]:
    """Best allocation using at most ``h`` suppressants on a Silver Bullet instance.

    Gadget slots pair recipients with donors by slot index.  Under MaxTR a
    slot may pair a recipient with a compatible donor; the allocation then
    records a compatible transplant, which still respects the budget.
    """
    if h < 0:
        raise ValueError(f"budget must be non-negative, got {h}")
    if not is_silver_bullet(inst):
        raise ModelClassError(
            "a suppressant budget needs a Silver Bullet instance (no incompatible donors); "
            "use the integer program for general instances"
        )
    if not scheme.uniform_half:
        raise ValueError("the gadget needs a uniform half-compatible weight; custom schemes are unsupported")
    g = add_suppressant_gadget(_clearing_graph(inst, scheme, strict_pairs), h)
    m = max_weight_perfect_matching(g)
    if m is None:
        raise KeiError("gadget graph has no perfect matching")
    alloc = matching_to_allocation(g, m.edges, inst)
    return alloc, stats(inst, alloc)


@dataclass(frozen=True)
class BudgetedMatchingInstance:
    graph: ExchangeGraph
    special: tuple[int, ...]  # indices of E' (half-compatible edges)
    weights: tuple[int, ...]
    budget: int
    target: int

    def to_json(self) -> dict:
        g = self.graph
        return {
            "version": 1,
            "problem": "unit-cost-budgeted-matching",
            "left": [str(v) for v in g.left],
            "right": [str(v) for v in g.right],
            "edges": [
                {
                    "left": str(e.left),
                    "right": str(e.right),
                    "kind": e.kind.value,
                    "weight": w,
                    "special": i in set(self.special),
                }
                for i, (e, w) in enumerate(zip(g.edges, self.weights))
            ],
            "budget": self.budget,
            "target": self.target,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)


def export_budgeted_matching(
    inst: KeiInstance,
    h: int,
    t: int,
    scheme: Optional[WeightScheme] = None,
    strict_pairs: bool = False,
) -> BudgetedMatchingInstance:
    """Unit-cost budgeted matching instance equivalent to h-MaxKEI; every
    weight is shifted by n so maximum-weight matchings are perfect."""
    scheme = scheme or WeightScheme.of(SchemeKind.MAX_TR)
    g = _clearing_graph(inst, scheme, strict_pairs)
    special = tuple(i for i, e in enumerate(g.edges) if e.kind is EdgeKind.HALF)
    weights = tuple(e.weight + inst.n for e in g.edges)
    return BudgetedMatchingInstance(g, special, weights, h, t)
