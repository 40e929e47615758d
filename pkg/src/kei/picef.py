"""Position-indexed cycle/chain integer program with a suppressant budget.

Variables: ``y[e, k]`` edge e used at chain position k, ``z[c]`` cycle c
selected, ``u[e]`` edge e used anywhere.  Rows:

    (i)   each pair vertex receives at most one kidney
    (ii)  chain flow: a pair gives at position k+1 only if it received at k
    (iii) each altruist starts at most one chain
    (iv)  u[e] equals the chain and cycle usage of e
    (v)   sum of u[e] over half-compatible edges <= budget
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .core import Allocation, KeiError, KeiInstance
from .schemes import SchemeKind, WeightScheme

LOGGER = logging.getLogger(__name__)

# simple-path position search stops refining past this many DFS steps
POSITION_WORK_CAP = 200_000


@dataclass(frozen=True)
class PoolVertex:
    index: int
    recipient: Optional[int]  # None for altruistic donors
    donor: Optional[int]  # None for single recipients

    @property
    def is_ndd(self) -> bool:
        return self.recipient is None


@dataclass(frozen=True)
class PoolEdge:
    index: int
    source: int
    target: int
    half: bool
    weight: int


@dataclass(frozen=True)
class DirectedPoolGraph:
    vertices: tuple[PoolVertex, ...]
    edges: tuple[PoolEdge, ...]
    offset: int = 0  # objective constant (waiting gains of custom schemes)

    @property
    def pair_vertices(self) -> list[PoolVertex]:
        return [v for v in self.vertices if not v.is_ndd]

    @property
    def ndd_vertices(self) -> list[PoolVertex]:
        return [v for v in self.vertices if v.is_ndd]

    def out_edges(self) -> dict[int, list[PoolEdge]]:
        out: dict[int, list[PoolEdge]] = defaultdict(list)
        for e in self.edges:
            out[e.source].append(e)
        return out

    def in_edges(self) -> dict[int, list[PoolEdge]]:
        into: dict[int, list[PoolEdge]] = defaultdict(list)
        for e in self.edges:
            into[e.target].append(e)
        return into

    def edge_between(self) -> dict[tuple[int, int], PoolEdge]:
        return {(e.source, e.target): e for e in self.edges}


def build_pool_graph(
    inst: KeiInstance,
    scheme: Optional[WeightScheme] = None,
    strict_pairs: bool = True,
    self_loops: bool = True,
) -> DirectedPoolGraph:
    """One vertex per recipient (with her donor, if any), then one per altruist.

    Edge weights are the scheme's transplant weight minus the recipient's
    waiting gain; the waiting gains are summed into ``offset`` so the
    objective matches the bipartite matching weight.
    """
    s = (scheme or WeightScheme.of(SchemeKind.MAX_TR)).resolve(inst)
    vertices = [PoolVertex(r, r, inst.donor_of(r)) for r in range(inst.n)]
    vertices += [PoolVertex(inst.n + k, None, a) for k, a in enumerate(inst.altruists())]
    vertex_of_donor = {v.donor: v.index for v in vertices if v.donor is not None}

    edges: list[PoolEdge] = []
    for r in range(inst.n):
        protect = strict_pairs and inst.is_own_compatible(r)
        wait = s.private_weight(r)
        links: list[tuple[int, bool, int]] = [
            (d, False, s.compatible_weight(r, d)) for d in inst.compat[r]
        ]
        if not protect:
            for d in inst.half[r]:
                w = s.half_weight(r, d)
                if w is not None:
                    links.append((d, True, w))
        for d, half, w in links:
            src = vertex_of_donor[d]
            if src == r and not self_loops:
                continue
            edges.append(PoolEdge(-1, src, r, half, w - wait))
    edges.sort(key=lambda e: (e.source, e.target))
    edges = [PoolEdge(i, e.source, e.target, e.half, e.weight) for i, e in enumerate(edges)]
    offset = sum(s.private_weight(r) for r in range(inst.n))
    return DirectedPoolGraph(tuple(vertices), tuple(edges), offset)


@dataclass(frozen=True)
class Cycle:
    vertices: tuple[int, ...]  # canonical rotation, smallest id first
    edges: tuple[int, ...]
    weight: int
    n_half: int

    def __len__(self) -> int:
        return len(self.vertices)


def enumerate_cycles(g: DirectedPoolGraph, max_length: int) -> list[Cycle]:
    """All simple cycles over pair vertices with at most ``max_length`` edges."""
    if max_length < 1:
        return []
    out = g.out_edges()
    found: list[Cycle] = []
    for start in (v.index for v in g.pair_vertices):
        path = [start]
        path_edges: list[PoolEdge] = []
        on_path = {start}

        def walk(at: int) -> None:
            for e in out.get(at, ()):
                t = e.target
                if t == start:
                    es = path_edges + [e]
                    found.append(
                        Cycle(
                            tuple(path),
                            tuple(x.index for x in es),
                            sum(x.weight for x in es),
                            sum(x.half for x in es),
                        )
                    )
                elif t > start and t not in on_path and len(path) < max_length:
                    path.append(t)
                    path_edges.append(e)
                    on_path.add(t)
                    walk(t)
                    on_path.discard(t)
                    path_edges.pop()
                    path.pop()

        walk(start)
    found.sort(key=lambda c: (len(c), c.vertices))
    return found


def compute_positions(g: DirectedPoolGraph, max_chain: int) -> dict[int, frozenset[int]]:
    """Chain positions each edge can take.

    Altruist edges take position 1.  A pair edge (u, v) can take position k
    when a simple path of k - 1 edges leads from an altruist to u.  If the
    exact path search exceeds POSITION_WORK_CAP steps, walk lengths are used
    instead (a superset, so the model stays valid).
    """
    positions: dict[int, frozenset[int]] = {e.index: frozenset() for e in g.edges}
    if max_chain < 1:
        return positions
    ndds = {v.index for v in g.ndd_vertices}
    out = g.out_edges()
    reach = _simple_path_lengths(g, max_chain - 1, ndds, out)
    if reach is None:
        LOGGER.info("position refinement hit the work cap; using walk lengths")
        reach = _walk_lengths(g, max_chain - 1, ndds, out)
    for e in g.edges:
        if e.source in ndds:
            positions[e.index] = frozenset({1})
        elif e.source != e.target:
            positions[e.index] = frozenset(k + 1 for k in reach.get(e.source, ()) if k + 1 <= max_chain)
    return positions


def _simple_path_lengths(g, limit, ndds, out) -> Optional[dict[int, set[int]]]:
    reach: dict[int, set[int]] = defaultdict(set)
    work = 0
    for a in sorted(ndds):
        on_path = {a}

        def dfs(at: int, depth: int) -> bool:
            nonlocal work
            for e in out.get(at, ()):
                t = e.target
                if t in on_path:
                    continue
                work += 1
                if work > POSITION_WORK_CAP:
                    return False
                reach[t].add(depth + 1)
                if depth + 1 < limit:
                    on_path.add(t)
                    ok = dfs(t, depth + 1)
                    on_path.discard(t)
                    if not ok:
                        return False
            return True

        if limit >= 1 and not dfs(a, 0):
            return None
    return reach


def _walk_lengths(g, limit, ndds, out) -> dict[int, set[int]]:
    reach: dict[int, set[int]] = defaultdict(set)
    layer = set(ndds)
    for depth in range(1, limit + 1):
        layer = {e.target for v in layer for e in out.get(v, ()) if e.target not in ndds}
        for t in layer:
            reach[t].add(depth)
    return reach


Var = tuple  # ("y", edge, k) | ("z", cycle) | ("u", edge)


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[Var, int], ...]
    sense: str  # "<=", ">=", "=="
    rhs: int

    def activity(self, assignment: Mapping[Var, int]) -> int:
        return sum(c * assignment.get(v, 0) for v, c in self.coeffs)

    def satisfied(self, assignment: Mapping[Var, int]) -> bool:
        a = self.activity(assignment)
        if self.sense == "<=":
            return a <= self.rhs
        if self.sense == ">=":
            return a >= self.rhs
        return a == self.rhs


@dataclass(frozen=True)
class PicefModel:
    graph: DirectedPoolGraph
    cycles: tuple[Cycle, ...]
    positions: Mapping[int, frozenset[int]]
    max_cycle: int
    max_chain: int
    budget: Optional[int]
    variables: tuple[Var, ...]
    objective: Mapping[Var, int]
    rows: tuple[Row, ...]
    cycles_of_vertex: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    @property
    def offset(self) -> int:
        return self.graph.offset

    def value(self, assignment: Mapping[Var, int]) -> int:
        return sum(c * assignment.get(v, 0) for v, c in self.objective.items())


def build_model(
    g: DirectedPoolGraph,
    cycles: Iterable[Cycle],
    positions: Mapping[int, frozenset[int]],
    budget: Optional[int],
    max_cycle: Optional[int] = None,
    max_chain: Optional[int] = None,
) -> PicefModel:
    """Assemble the integer program; ``budget=None`` drops the budget row."""
    cycles = tuple(cycles)
    if max_cycle is None:
        max_cycle = max((len(c) for c in cycles), default=0)
    if max_chain is None:
        max_chain = max((k for ks in positions.values() for k in ks), default=0)
    ndds = {v.index for v in g.ndd_vertices}
    y_vars = [("y", e.index, k) for e in g.edges for k in sorted(positions.get(e.index, ()))]
    z_vars = [("z", c) for c in range(len(cycles))]
    u_vars = [("u", e.index) for e in g.edges]
    objective = {("u", e.index): e.weight for e in g.edges if e.weight}

    into = g.in_edges()
    out = g.out_edges()
    by_vertex: dict[int, list[int]] = defaultdict(list)
    by_edge: dict[int, list[int]] = defaultdict(list)
    for ci, c in enumerate(cycles):
        for v in c.vertices:
            by_vertex[v].append(ci)
        for e in c.edges:
            by_edge[e].append(ci)

    rows: list[Row] = []
    for v in g.pair_vertices:
        coeffs = [
            (("y", e.index, k), 1) for e in into.get(v.index, ()) for k in sorted(positions[e.index])
        ]
        coeffs += [(("z", ci), 1) for ci in by_vertex.get(v.index, ())]
        if coeffs:
            rows.append(Row(f"capacity_{v.index}", tuple(coeffs), "<=", 1))
    for v in g.pair_vertices:
        for k in range(1, max_chain):
            gives = [(("y", e.index, k + 1), -1) for e in out.get(v.index, ()) if k + 1 in positions[e.index]]
            if not gives:
                continue
            gets = [(("y", e.index, k), 1) for e in into.get(v.index, ()) if k in positions[e.index]]
            rows.append(Row(f"flow_{v.index}_{k}", tuple(gets + gives), ">=", 0))
    for a in sorted(ndds):
        coeffs = [(("y", e.index, 1), 1) for e in out.get(a, ()) if 1 in positions[e.index]]
        if coeffs:
            rows.append(Row(f"altruist_{a}", tuple(coeffs), "<=", 1))
    for e in g.edges:
        coeffs = [(("u", e.index), 1)]
        coeffs += [(("y", e.index, k), -1) for k in sorted(positions[e.index])]
        coeffs += [(("z", ci), -1) for ci in by_edge.get(e.index, ())]
        rows.append(Row(f"usage_{e.index}", tuple(coeffs), "==", 0))
    if budget is not None:
        half = [(("u", e.index), 1) for e in g.edges if e.half]
        rows.append(Row("budget", tuple(half), "<=", budget))

    return PicefModel(
        graph=g,
        cycles=cycles,
        positions=dict(positions),
        max_cycle=max_cycle,
        max_chain=max_chain,
        budget=budget,
        variables=tuple(y_vars + z_vars + u_vars),
        objective=objective,
        rows=tuple(rows),
        cycles_of_vertex={v: tuple(cs) for v, cs in by_vertex.items()},
    )


def picef_model(
    inst: KeiInstance,
    max_cycle: int,
    max_chain: int,
    budget: Optional[int],
    scheme: Optional[WeightScheme] = None,
    strict_pairs: bool = True,
    self_loops: bool = True,
) -> PicefModel:
    g = build_pool_graph(inst, scheme, strict_pairs, self_loops)
    cycles = enumerate_cycles(g, max_cycle)
    positions = compute_positions(g, max_chain)
    return build_model(g, cycles, positions, budget, max_cycle, max_chain)


def with_budget(model: PicefModel, budget: Optional[int]) -> PicefModel:
    """Same model with a different suppressant budget."""
    return build_model(
        model.graph, model.cycles, model.positions, budget, model.max_cycle, model.max_chain
    )


@dataclass(frozen=True)
class IlpSolution:
    cycles: tuple[tuple[int, ...], ...]
    chains: tuple[tuple[int, tuple[int, ...]], ...]  # (altruist vertex, pair vertices in order)
    objective: int  # includes the model offset
    suppressants: int


class ConstraintViolation(KeiError):
    pass


def extract_solution(
    model: PicefModel, assignment: Mapping[Var, int], inst: Optional[KeiInstance] = None
) -> tuple[IlpSolution, Optional[Allocation]]:
    for var, val in assignment.items():
        if val not in (0, 1):
            raise ConstraintViolation(f"variable {var} is not binary ({val})")
    for row in model.rows:
        if not row.satisfied(assignment):
            raise ConstraintViolation(
                f"row {row.name} violated: {row.activity(assignment)} {row.sense} {row.rhs}"
            )
    g = model.graph
    edge = {e.index: e for e in g.edges}
    cycles = tuple(model.cycles[v[1]].vertices for v, x in assignment.items() if v[0] == "z" and x)

    chain_step: dict[tuple[int, int], int] = {}  # (source vertex, position) -> edge
    for v, x in assignment.items():
        if v[0] == "y" and x:
            chain_step[(edge[v[1]].source, v[2])] = v[1]
    chains = []
    for a in g.ndd_vertices:
        e = chain_step.get((a.index, 1))
        if e is None:
            continue
        members = []
        k = 1
        while e is not None:
            t = edge[e].target
            members.append(t)
            k += 1
            e = chain_step.get((t, k))
        chains.append((a.index, tuple(members)))

    used = [edge[v[1]] for v, x in assignment.items() if v[0] == "u" and x]
    solution = IlpSolution(
        cycles=tuple(sorted(cycles)),
        chains=tuple(chains),
        objective=model.value(assignment) + model.offset,
        suppressants=sum(1 for e in used if e.half),
    )
    if inst is None:
        return solution, None
    vert = {v.index: v for v in g.vertices}
    assignment_map = {vert[e.target].recipient: vert[e.source].donor for e in used}
    return solution, Allocation.from_assignment(inst, assignment_map)


def to_lp(model: PicefModel) -> str:
    """CPLEX-LP text for cross-checking with external solvers."""

    def name(v: Var) -> str:
        return "_".join(str(x) for x in v)

    def terms(pairs) -> str:
        parts = []
        for v, c in pairs:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            parts.append(f"{sign} {mag} {name(v)}" if mag != 1 else f"{sign} {name(v)}")
        text = " ".join(parts) or "0"
        return text[2:] if text.startswith("+ ") else text

    lines = ["\\ suppressant-budgeted cycle/chain model", "Maximize", " obj: " + terms(sorted(model.objective.items()))]
    lines.append("Subject To")
    senses = {"<=": "<=", ">=": ">=", "==": "="}
    for row in model.rows:
        lines.append(f" {row.name}: {terms(row.coeffs)} {senses[row.sense]} {row.rhs}")
    lines.append("Binary")
    lines.extend(" " + name(v) for v in model.variables)
    lines.append("End")
    return "\n".join(lines) + "\n"
