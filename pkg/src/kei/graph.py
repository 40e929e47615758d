"""Bipartite exchange graph and the suppressant-budget gadget.

Left side: real recipients, one dummy recipient per altruistic donor and,
once the gadget is added, the B slot vertices.  Right side: real donors,
one dummy donor per single recipient and the A slot vertices.  Every
perfect matching is an exchange that respects the donor/recipient coupling;
recipients matched along their private edge receive nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional, Sequence

from .core import (
    Allocation,
    KeiError,
    KeiInstance,
    ModelClassError,
    is_silver_bullet,
)
from .schemes import WeightScheme


class EdgeKind(str, Enum):
    PRIVATE = "private"
    DUMMY = "dummy"
    COMPATIBLE = "compatible"
    HALF = "half"
    GADGET = "gadget"
    GADGET_LINK = "gadget-link"


class Vertex(NamedTuple):
    cls: str  # R, R0, B on the left; D, D0, A on the right
    index: int

    def __str__(self) -> str:
        names = {"R": "r", "R0": "r0_", "B": "b", "D": "d", "D0": "d0_", "A": "a"}
        return f"{names[self.cls]}{self.index}"


@dataclass(frozen=True)
class Edge:
    left: Vertex
    right: Vertex
    kind: EdgeKind
    weight: int


@dataclass(frozen=True)
class ExchangeGraph:
    instance: KeiInstance
    left: tuple[Vertex, ...]
    right: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    scale: int = 1  # weights are this multiple of the scheme weights
    budget: Optional[int] = None  # gadget size, if a gadget was added

    def vertices(self, cls: str) -> list[Vertex]:
        side = self.left if cls in ("R", "R0", "B") else self.right
        return [v for v in side if v.cls == cls]

    def edges_of(self, kind: EdgeKind) -> list[Edge]:
        return [e for e in self.edges if e.kind is kind]

    def indexed(self) -> tuple[int, int, list[tuple[int, int, int]]]:
        """Edges as ``(left position, right position, weight)`` triples."""
        lpos = {v: i for i, v in enumerate(self.left)}
        rpos = {v: i for i, v in enumerate(self.right)}
        return (
            len(self.left),
            len(self.right),
            [(lpos[e.left], rpos[e.right], e.weight) for e in self.edges],
        )

    def with_weights(self, weights: Sequence[int]) -> "ExchangeGraph":
        edges = tuple(replace(e, weight=w) for e, w in zip(self.edges, weights))
        return replace(self, edges=edges)


def build_graph(inst: KeiInstance, scheme: WeightScheme) -> ExchangeGraph:
    s = scheme.resolve(inst)
    singles = inst.singles()
    altruists = inst.altruists()
    left = [Vertex("R", i) for i in range(inst.n)] + [Vertex("R0", d) for d in altruists]
    right = [Vertex("D", j) for j in range(inst.m)] + [Vertex("D0", r) for r in singles]

    edges: list[Edge] = []
    for r in range(inst.n):
        d = inst.donor_of(r)
        mate = Vertex("D", d) if d is not None else Vertex("D0", r)
        edges.append(Edge(Vertex("R", r), mate, EdgeKind.PRIVATE, s.private_weight(r)))
    for a in altruists:
        edges.append(Edge(Vertex("R0", a), Vertex("D", a), EdgeKind.PRIVATE, 0))
    for a in altruists:
        for v in right:
            if v != Vertex("D", a):
                edges.append(Edge(Vertex("R0", a), v, EdgeKind.DUMMY, 0))
    for r in range(inst.n):
        for d in sorted(inst.compat[r]):
            edges.append(
                Edge(Vertex("R", r), Vertex("D", d), EdgeKind.COMPATIBLE, s.compatible_weight(r, d))
            )
    for r in range(inst.n):
        for d in sorted(inst.half[r]):
            w = s.half_weight(r, d)
            if w is not None:
                edges.append(Edge(Vertex("R", r), Vertex("D", d), EdgeKind.HALF, w))
    return ExchangeGraph(inst, tuple(left), tuple(right), tuple(edges))


def restrict_compatible_pairs(g: ExchangeGraph, inst: Optional[KeiInstance] = None) -> ExchangeGraph:
    """Drop half-compatible edges into recipients whose own donor is compatible."""
    inst = inst or g.instance
    protected = {r for r in range(inst.n) if inst.is_own_compatible(r)}
    keep = tuple(
        e
        for e in g.edges
        if not (e.kind is EdgeKind.HALF and e.left.cls == "R" and e.left.index in protected)
    )
    return replace(g, edges=keep)


def add_suppressant_gadget(g: ExchangeGraph, h: int) -> ExchangeGraph:
    """Route every half-compatible edge through ``h`` zero-weight slots.

    Weights are doubled first so the two half-weight gadget edges stay
    integral; ``scale`` records the factor.
    """
    if h < 0:
        raise ValueError(f"budget must be non-negative, got {h}")
    if g.budget is not None:
        raise KeiError("graph already carries a suppressant gadget")
    if not is_silver_bullet(g.instance):
        raise ModelClassError("the suppressant gadget is only valid for Silver Bullet instances")

    half = g.edges_of(EdgeKind.HALF)
    r_weight: dict[int, int] = {}
    d_weight: dict[int, int] = {}
    for e in half:
        for table, idx in ((r_weight, e.left.index), (d_weight, e.right.index)):
            if table.setdefault(idx, e.weight) != e.weight:
                raise ValueError(
                    "gadget needs one half-compatible weight per vertex; "
                    "pair-specific half weights are not supported"
                )

    edges = [replace(e, weight=2 * e.weight) for e in g.edges if e.kind is not EdgeKind.HALF]
    a_side = [Vertex("A", k) for k in range(h)]
    b_side = [Vertex("B", k) for k in range(h)]
    for k in range(h):
        edges.append(Edge(b_side[k], a_side[k], EdgeKind.GADGET_LINK, 0))
    for r, w in sorted(r_weight.items()):
        for k in range(h):
            edges.append(Edge(Vertex("R", r), a_side[k], EdgeKind.GADGET, w))
    for d, w in sorted(d_weight.items()):
        for k in range(h):
            edges.append(Edge(b_side[k], Vertex("D", d), EdgeKind.GADGET, w))
    return replace(
        g,
        left=g.left + tuple(b_side),
        right=g.right + tuple(a_side),
        edges=tuple(edges),
        scale=2 * g.scale,
        budget=h,
    )


def matching_to_allocation(
    g: ExchangeGraph, matching: Sequence[int], inst: Optional[KeiInstance] = None
) -> Allocation:
    """Translate a perfect matching (edge indices into ``g.edges``)."""
    inst = inst or g.instance
    chosen = [g.edges[i] for i in matching]
    covered_l = [e.left for e in chosen]
    covered_r = [e.right for e in chosen]
    if (
        len(set(covered_l)) != len(covered_l)
        or len(set(covered_r)) != len(covered_r)
        or set(covered_l) != set(g.left)
        or set(covered_r) != set(g.right)
    ):
        raise KeiError("matching is not a perfect matching of the graph")

    assignment: dict[int, int] = {}
    slot_recipient: dict[int, int] = {}
    slot_donor: dict[int, int] = {}
    for e in chosen:
        if e.kind in (EdgeKind.COMPATIBLE, EdgeKind.HALF):
            assignment[e.left.index] = e.right.index
        elif e.kind is EdgeKind.GADGET:
            if e.right.cls == "A":
                slot_recipient[e.right.index] = e.left.index
            else:
                slot_donor[e.left.index] = e.right.index
    for k, r in slot_recipient.items():
        assignment[r] = slot_donor[k]
    return Allocation.from_assignment(inst, assignment)


_DOT_STYLE = {
    EdgeKind.PRIVATE: 'style=dotted',
    EdgeKind.DUMMY: 'style=dotted, color=gray',
    EdgeKind.COMPATIBLE: 'style=solid',
    EdgeKind.HALF: 'style=dashed',
    EdgeKind.GADGET: 'style=dashed, color=gray',
    EdgeKind.GADGET_LINK: 'style=solid, color=gray',
}


def to_dot(g: ExchangeGraph, matching: Sequence[int] = ()) -> str:
    chosen = set(matching)
    lines = ["graph exchange {", "  rankdir=LR;"]
    for v in g.left + g.right:
        shape = "box" if v.cls in ("R0", "D0") else "circle"
        lines.append(f'  "{v}" [shape={shape}];')
    for i, e in enumerate(g.edges):
        bold = ", penwidth=3" if i in chosen else ""
        lines.append(f'  "{e.left}" -- "{e.right}" [{_DOT_STYLE[e.kind]}, label="{e.weight}"{bold}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
