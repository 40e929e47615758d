"""Exact solvers for the cycle/chain model.

``BranchAndBound`` is the bundled depth-first solver.  Its bound at a node
is the tighter of two admissible relaxations of the remaining problem:

* a greedy per-recipient bound: every recipient takes her best incoming
  edge, with at most the residual budget of them upgraded to half edges;
* the exchange relaxation: a maximum-weight perfect matching on the
  residual recipient/donor graph (cycles and chains of any length), with
  the budget priced in by a few Lagrangian multipliers.

When the relaxation's optimal exchange already respects the cycle cap,
chain cap and budget, it is optimal for the node and the node closes.
Otherwise the search branches on a violated structure: extend or close a
chain head, or commit a vertex to one of its cycles or forbid it from
cycles.

``HighsBackend`` hands the model rows to HiGHS through ``scipy.optimize.milp``
for cross-checking and larger pools.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Allocation, KeiInstance
from .picef import IlpSolution, PicefModel, Var
from .schemes import WeightScheme

LOGGER = logging.getLogger(__name__)

NEG = -np.inf
EPS = 1e-6
HEURISTIC_EARLY = 32  # run the repair heuristic at the first nodes ...
HEURISTIC_EVERY = 64  # ... and periodically afterwards


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


@dataclass
class SolveResult:
    status: SolveStatus
    assignment: dict[Var, int]
    objective: int  # model objective without the offset
    bound: float
    nodes: int = 0
    trajectory: list[tuple[int, float, int]] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return max(0.0, self.bound - self.objective)

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


class SolverBackend:
    name = "abstract"
    exact = True

    def solve(
        self,
        model: PicefModel,
        time_limit: Optional[float] = None,
        node_limit: Optional[int] = None,
    ) -> SolveResult:
        raise NotImplementedError


@dataclass(frozen=True)
class SearchState:
    avail: frozenset[int]  # uncovered pair vertices still usable
    nocycle: frozenset[int]  # usable in chains only
    heads: tuple[tuple[int, int], ...]  # open chains: (vertex, edges used so far)
    budget: int
    value: int
    decisions: tuple[Var, ...] = ()


@dataclass
class _Relaxation:
    bound: int
    feasible: Optional[tuple[int, tuple[Var, ...]]]  # (value, decisions) if the relaxation is packable
    target: Optional[tuple[str, int]]  # ("head", vertex) or ("vertex", v)
    succ: dict[int, int] = field(default_factory=dict)  # the relaxation's exchange


class _Limit(Exception):
    pass


class BranchAndBound(SolverBackend):
    name = "bnb"
    exact = True

    def __init__(self, model: Optional[PicefModel] = None):
        self._model = None
        if model is not None:
            self._prepare(model)

    # -- setup -----------------------------------------------------------------

    def _prepare(self, model: PicefModel) -> None:
        if self._model is model:
            return
        self._model = model
        g = model.graph
        nv = len(g.vertices)
        self.max_chain = model.max_chain
        self.ndds = [v.index for v in g.ndd_vertices]
        self.has_donor = {v.index: v.donor is not None for v in g.vertices}
        self.edges = g.edges
        # weights come from the objective so reweighted models solve as written
        self.ew = {e.index: model.objective.get(("u", e.index), 0) for e in g.edges}
        self.cw = [sum(self.ew[x] for x in c.edges) for c in model.cycles]
        self.pos = {e: frozenset(ks) for e, ks in model.positions.items()}
        self.out = g.out_edges()
        in_cycle = {e for c in model.cycles for e in c.edges}
        self.cycle_index = {c.vertices: i for i, c in enumerate(model.cycles)}
        self.cycles_of_vertex = model.cycles_of_vertex

        self.w = np.full((nv, nv), NEG)  # [target (in side), source (out side)]
        self.half = np.zeros((nv, nv))
        self.cyc_ok = np.zeros((nv, nv), dtype=bool)
        self.chain_max = np.zeros((nv, nv), dtype=int)  # largest chain position, 0 = none
        self.self_w = np.full(nv, NEG)
        self.self_half = np.zeros(nv)
        self.edge_at = {}
        for e in g.edges:
            self.edge_at[(e.source, e.target)] = e
            if e.source == e.target:
                if e.index in in_cycle:
                    self.self_w[e.target] = self.ew[e.index]
                    self.self_half[e.target] = float(e.half)
                continue
            self.w[e.target, e.source] = self.ew[e.index]
            self.half[e.target, e.source] = float(e.half)
            self.cyc_ok[e.target, e.source] = e.index in in_cycle
            ks = self.pos.get(e.index, ())
            self.chain_max[e.target, e.source] = max(ks) if ks else 0
        self._greedy_order = sorted(
            range(len(model.cycles)),
            key=lambda i: (-self.cw[i], model.cycles[i].n_half, len(model.cycles[i]), i),
        )
        halves = [self.ew[e.index] for e in g.edges if e.half]
        self.lambda_hi = float(max(1, max(halves, default=1)))

    def root_state(self, model: PicefModel) -> SearchState:
        self._prepare(model)
        budget = model.budget if model.budget is not None else len(model.graph.edges)
        heads = tuple((a, 0) for a in self.ndds) if self.max_chain >= 1 else ()
        avail = frozenset(v.index for v in model.graph.pair_vertices)
        return self._normalize(SearchState(avail, frozenset(), heads, budget, 0))

    def _normalize(self, s: SearchState) -> SearchState:
        if not s.heads and s.nocycle:
            return SearchState(s.avail - s.nocycle, frozenset(), (), s.budget, s.value, s.decisions)
        return s

    # -- relaxation ------------------------------------------------------------

    def _matrix(self, s: SearchState, lam: float) -> tuple[np.ndarray, np.ndarray, list[int]]:
        """Weights and half-edge indicators of the residual exchange graph.

        Rows: recipients of ``avail`` then one sink per open head.
        Columns: donors of ``avail`` then the open heads.
        """
        av = sorted(s.avail)
        na, nh = len(av), len(s.heads)
        size = na + nh
        mat = np.full((size, size), NEG)
        hal = np.zeros((size, size))
        if na:
            idx = np.array(av)
            sub_w = self.w[np.ix_(idx, idx)]
            sub_h = self.half[np.ix_(idx, idx)]
            allowed = self.cyc_ok[np.ix_(idx, idx)].copy()
            if s.nocycle:
                nc = np.array([v in s.nocycle for v in av])
                allowed[nc, :] = False
                allowed[:, nc] = False
            if s.heads:
                # a pair-to-pair edge sits at least two positions behind the nearest head
                reach = min(p for _, p in s.heads) + 2
                allowed |= self.chain_max[np.ix_(idx, idx)] >= reach
            block = np.where(allowed, sub_w - lam * sub_h, NEG)
            sw = self.self_w[idx] - lam * self.self_half[idx]
            if s.nocycle:
                sw = np.where(nc, NEG, sw)
            diag_edge = sw > 0
            block[np.arange(na), np.arange(na)] = np.where(diag_edge, sw, 0.0)
            hal_block = np.where(allowed, sub_h, 0.0)
            hal_block[np.arange(na), np.arange(na)] = np.where(diag_edge, self.self_half[idx], 0.0)
            mat[:na, :na] = block
            hal[:na, :na] = hal_block
        row_of = {v: i for i, v in enumerate(av)}
        for j, (hv, p) in enumerate(s.heads):
            col = na + j
            for e in self.out.get(hv, ()):
                i = row_of.get(e.target)
                if i is not None and p + 1 in self.pos.get(e.index, ()):
                    mat[i, col] = self.ew[e.index] - lam * e.half
                    hal[i, col] = float(e.half)
        mat[na:, :] = 0.0
        return mat, hal, av

    def _assign(self, mat: np.ndarray, hal: np.ndarray) -> tuple[float, int, np.ndarray]:
        if mat.shape[0] == 0:
            return 0.0, 0, np.zeros(0, dtype=int)
        rows, cols = linear_sum_assignment(mat, maximize=True)
        val = float(mat[rows, cols].sum())
        hc = int(round(hal[rows, cols].sum()))
        return val, hc, cols

    def _greedy_bound(self, mat: np.ndarray, hal: np.ndarray, budget: int, na: int) -> float:
        if na == 0:
            return 0.0
        sub = mat[:na]
        plain = np.where(hal[:na] > 0, NEG, sub).max(axis=1)
        plain = np.maximum(plain, 0.0)
        halfbest = np.where(hal[:na] > 0, sub, NEG).max(axis=1)
        gain = np.sort(np.maximum(halfbest - plain, 0.0))[::-1]
        return float(plain.sum() + gain[:budget].sum())

    def _relax(self, s: SearchState) -> _Relaxation:
        mat, hal, av = self._matrix(s, 0.0)
        na = len(av)
        greedy = self._greedy_bound(mat, hal, s.budget, na)
        val0, hc0, cols = self._assign(mat, hal)
        bound = min(greedy, val0)
        if hc0 > s.budget:
            bound = min(bound, self._lagrangian(s, val0, hc0))
        bound_int = s.value + int(math.floor(bound + EPS))

        feasible, target, succ = self._decode(s, mat, hal, av, cols, val0, hc0)
        return _Relaxation(bound_int, feasible, target, succ)

    def _lagrangian(self, s: SearchState, w_lo: float, hc_lo: int) -> float:
        """Minimize max_x [w(x) - lam * (hc(x) - budget)] over a few multipliers.

        One-dimensional cutting planes: the next multiplier is where the
        best lines found on either side of the budget intersect.
        """
        b = s.budget
        lo = (w_lo, hc_lo)  # a solution over budget
        hi = None  # a solution within budget
        lam = self.lambda_hi
        best = math.inf
        for _ in range(8):
            mat, hal, _ = self._matrix(s, lam)
            val, hc, _ = self._assign(mat, hal)
            best = min(best, val + lam * b)
            w = val + lam * hc
            if hc > b:
                lo = (w, hc)
            else:
                hi = (w, hc)
            if hi is None:
                lam *= 2
                continue
            nxt = (lo[0] - hi[0]) / (lo[1] - hi[1])
            if abs(nxt - lam) < 1e-9:
                break
            lam = nxt
        return best

    def _successors(self, s, mat, hal, av, cols):
        """Giver -> receiver map of an assignment, plus its half edges."""
        na = len(av)
        succ: dict[int, int] = {}
        half_edges: list[tuple[int, int]] = []
        for i in range(na):
            c = int(cols[i])
            v = av[i]
            if c == i:
                if self.self_w[v] > NEG and mat[i, i] > 0:
                    succ[v] = v
                    if hal[i, i]:
                        half_edges.append((v, v))
                continue
            if mat[i, c] == NEG:
                continue
            giver = av[c] if c < na else s.heads[c - na][0]
            succ[giver] = v
            if hal[i, c]:
                half_edges.append((giver, v))
        return succ, half_edges

    def _decode(self, s, mat, hal, av, cols, val0, hc0):
        """Split the relaxation's matching into chains and cycles and test
        whether it is a feasible packing for this node."""
        succ, half_edges = self._successors(s, mat, hal, av, cols)

        decisions: list[Var] = []
        value = 0
        chain_of: dict[int, int] = {}
        violation = None
        for hv, p in s.heads:
            at, k = hv, p
            while at in succ:
                nxt = succ[at]
                e = self.edge_at[(at, nxt)]
                k += 1
                chain_of[nxt] = hv
                if k not in self.pos.get(e.index, ()) or k > self.max_chain:
                    violation = violation or ("head", hv)
                decisions.append(("y", e.index, k))
                value += self.ew[e.index]
                at = nxt
        seen = set(chain_of)
        for v in av:
            if v in seen or v not in succ:
                continue
            cyc = [v]
            seen.add(v)
            at = succ[v]
            while at != v:
                cyc.append(at)
                seen.add(at)
                at = succ[at]
            start = cyc.index(min(cyc))
            canon = tuple(cyc[start:] + cyc[:start])
            ci = self.cycle_index.get(canon)
            if ci is None or any(x in s.nocycle for x in canon):
                if violation is None:
                    free = [x for x in canon if x not in s.nocycle]
                    violation = ("vertex", min(free)) if free else ("head", s.heads[0][0])
                continue
            decisions.append(("z", ci))
            value += self.cw[ci]
        if violation is None and hc0 > s.budget:
            giver, recv = half_edges[0]
            if recv in chain_of:
                violation = ("head", chain_of[recv])
            else:
                violation = ("vertex", min(self._cycle_containing(succ, recv)))
        if violation is not None:
            return None, violation, succ
        return (s.value + value, s.decisions + tuple(decisions)), None, succ

    def _cycles_in(self, succ: dict[int, int], avail: set[int], nocycle: frozenset[int]) -> list[int]:
        """Indices of model cycles formed by ``succ`` inside ``avail``."""
        found, seen = [], set()
        for v in sorted(avail):
            if v in seen or v not in succ:
                continue
            cyc, at = [v], succ[v]
            while at != v and at in succ and at in avail and at not in seen and len(cyc) <= len(avail):
                if at in cyc:
                    break
                cyc.append(at)
                at = succ[at]
            seen.update(cyc)
            if at != v:
                continue
            start = cyc.index(min(cyc))
            ci = self.cycle_index.get(tuple(cyc[start:] + cyc[:start]))
            if ci is not None and not nocycle.intersection(cyc):
                found.append(ci)
        return found

    def _heuristic(self, s: SearchState, succ: dict[int, int]) -> tuple[int, tuple[Var, ...]]:
        """A feasible completion of ``s`` repaired from a relaxation exchange.

        Chains follow ``succ`` from each head while the edges stay valid.
        Valid cycles are kept, leftovers are re-solved a few times as an
        assignment and filled greedily, then a local search polishes the
        cycle packing.
        """
        avail = set(s.avail)
        budget, value = s.budget, s.value
        chain_steps: list[Var] = []
        cycles = self._model.cycles

        for hv, p in s.heads:
            at, k = hv, p
            while at in succ and k < self.max_chain:
                nxt = succ[at]
                e = self.edge_at.get((at, nxt))
                if nxt not in avail or e is None or k + 1 not in self.pos.get(e.index, ()) or e.half > budget:
                    break
                k += 1
                avail.discard(nxt)
                budget -= int(e.half)
                value += self.ew[e.index]
                chain_steps.append(("y", e.index, k))
                at = nxt

        region = avail - s.nocycle
        chosen: list[int] = []

        def keep(found: list[int]) -> bool:
            nonlocal budget, value
            took = False
            for ci in sorted(found, key=lambda i: (cycles[i].n_half, -self.cw[i], i)):
                c = cycles[ci]
                if c.n_half <= budget and avail.issuperset(c.vertices) and not s.nocycle.intersection(c.vertices):
                    avail.difference_update(c.vertices)
                    budget -= c.n_half
                    value += self.cw[ci]
                    chosen.append(ci)
                    took = True
            return took

        keep(self._cycles_in(succ, avail, s.nocycle))
        for _ in range(4):
            if not avail - s.nocycle:
                break
            rest = SearchState(frozenset(avail), s.nocycle & avail, (), budget, 0)
            mat, hal, av = self._matrix(rest, 0.0 if budget > 0 else 1e9)
            _, _, cols = self._assign(mat, hal)
            sub, _ = self._successors(rest, mat, hal, av, cols)
            if not keep(self._cycles_in(sub, avail, s.nocycle)):
                break
        keep(self._greedy_order)
        chosen, gain = self._local_search(region, chosen, budget)
        return value + gain, s.decisions + tuple(chain_steps) + tuple(("z", ci) for ci in chosen)

    def _local_search(self, region: set[int], chosen: list[int], budget: int) -> tuple[list[int], int]:
        """Improve a cycle packing inside ``region`` by inserting a cycle
        through an uncovered vertex, evicting at most one chosen cycle and
        re-covering what it frees.  Returns the packing and the weight gained."""
        cycles = self._model.cycles
        cover = {v: ci for ci in chosen for v in cycles[ci].vertices}
        packing = set(chosen)
        total = 0

        def refill(free: set[int], left: int, skip: set[int]) -> tuple[list[int], int, int]:
            picks, gain = [], 0
            for u in sorted(free):
                if u not in free:
                    continue
                best = None
                for ci in self.cycles_of_vertex.get(u, ()):
                    c = cycles[ci]
                    if c.n_half > left or not free.issuperset(c.vertices) or skip.intersection(c.vertices):
                        continue
                    if best is None or self.cw[ci] > self.cw[best]:
                        best = ci
                if best is not None and self.cw[best] > 0:
                    picks.append(best)
                    gain += self.cw[best]
                    left -= cycles[best].n_half
                    free.difference_update(cycles[best].vertices)
            return picks, gain, left

        improved = True
        while improved:
            improved = False
            for v in sorted(region - cover.keys()):
                if v in cover:
                    continue
                for ci in self.cycles_of_vertex.get(v, ()):
                    c = cycles[ci]
                    if not region.issuperset(c.vertices) or self.cw[ci] <= 0:
                        continue
                    blockers = {cover[u] for u in c.vertices if u in cover}
                    if len(blockers) > 1:
                        continue
                    if blockers:
                        b = blockers.pop()
                        left = budget + cycles[b].n_half - c.n_half
                        if left < 0:
                            continue
                        freed = set(cycles[b].vertices) - set(c.vertices)
                        picks, extra, left = refill(freed, left, set(c.vertices))
                        gain = self.cw[ci] - self.cw[b] + extra
                        if gain <= 0:
                            continue
                        packing.discard(b)
                        for u in cycles[b].vertices:
                            del cover[u]
                    else:
                        if c.n_half > budget:
                            continue
                        picks, gain, left = [], self.cw[ci], budget - c.n_half
                    for x in [ci] + picks:
                        packing.add(x)
                        for u in cycles[x].vertices:
                            cover[u] = x
                    budget = left
                    total += gain
                    improved = True
                    break
        return sorted(packing), total

    @staticmethod
    def _cycle_containing(succ, v):
        cyc = [v]
        at = succ[v]
        while at != v:
            cyc.append(at)
            at = succ[at]
        return cyc

    # -- branching -------------------------------------------------------------

    def _children(self, s: SearchState, target: tuple[str, int]) -> list[SearchState]:
        kind, x = target
        kids: list[SearchState] = []
        if kind == "head":
            j = next(i for i, (hv, _) in enumerate(s.heads) if hv == x)
            _, p = s.heads[j]
            others = s.heads[:j] + s.heads[j + 1:]
            kids.append(self._normalize(SearchState(s.avail, s.nocycle, others, s.budget, s.value, s.decisions)))
            for e in self.out.get(x, ()):
                if e.target not in s.avail or p + 1 not in self.pos.get(e.index, ()):
                    continue
                if e.half and s.budget < 1:
                    continue
                heads = others
                if p + 1 < self.max_chain and self.has_donor[e.target]:
                    heads = others[:j] + ((e.target, p + 1),) + others[j:]
                kids.append(
                    self._normalize(
                        SearchState(
                            s.avail - {e.target},
                            s.nocycle - {e.target},
                            heads,
                            s.budget - int(e.half),
                            s.value + self.ew[e.index],
                            s.decisions + (("y", e.index, p + 1),),
                        )
                    )
                )
        else:
            for ci in self.cycles_of_vertex.get(x, ()):
                c = self._model.cycles[ci]
                if c.n_half > s.budget:
                    continue
                members = set(c.vertices)
                if not members <= s.avail or members & s.nocycle:
                    continue
                kids.append(
                    SearchState(
                        s.avail - members,
                        s.nocycle,
                        s.heads,
                        s.budget - c.n_half,
                        s.value + self.cw[ci],
                        s.decisions + (("z", ci),),
                    )
                )
            kids.append(
                self._normalize(SearchState(s.avail, s.nocycle | {x}, s.heads, s.budget, s.value, s.decisions))
            )
        return kids

    def _canonical_target(self, s: SearchState) -> Optional[tuple[str, int]]:
        if s.heads:
            return ("head", s.heads[0][0])
        free = sorted(s.avail - s.nocycle)
        return ("vertex", free[0]) if free else None

    # -- search ----------------------------------------------------------------

    def solve(
        self,
        model: PicefModel,
        time_limit: Optional[float] = None,
        node_limit: Optional[int] = None,
    ) -> SolveResult:
        root = self.root_state(model)
        self._t0 = time.monotonic()
        self._deadline = self._t0 + time_limit if time_limit else None
        self._node_limit = node_limit
        self.nodes = 0
        self.best_value = 0
        self.best_decisions: tuple[Var, ...] = ()
        self.trajectory = [(0, 0.0, 0)]

        rel = self._evaluate(root)
        root_bound = rel.bound
        status = SolveStatus.OPTIMAL
        try:
            self._dfs(root, rel)
        except _Limit:
            status = SolveStatus.FEASIBLE
        assignment = self._assignment(self.best_decisions)
        bound = self.best_value if status is SolveStatus.OPTIMAL else max(root_bound, self.best_value)
        return SolveResult(status, assignment, self.best_value, bound, self.nodes, self.trajectory)

    def _evaluate(self, s: SearchState) -> _Relaxation:
        self.nodes += 1
        if self._node_limit is not None and self.nodes > self._node_limit:
            raise _Limit
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise _Limit
        return self._relax(s)

    def _offer(self, value: int, decisions: tuple[Var, ...]) -> None:
        if value > self.best_value:
            self.best_value = value
            self.best_decisions = decisions
            self.trajectory.append((self.nodes, time.monotonic() - self._t0, value))

    def _dfs(self, s: SearchState, rel: _Relaxation) -> None:
        if rel.bound <= self.best_value:
            return
        if rel.feasible is not None:
            self._offer(*rel.feasible)
            return
        if self.nodes <= HEURISTIC_EARLY or self.nodes % HEURISTIC_EVERY == 0:
            self._offer(*self._heuristic(s, rel.succ))
            if rel.bound <= self.best_value:
                return
        kids = [(self._evaluate(k), i, k) for i, k in enumerate(self._children(s, rel.target))]
        for k_rel, _, k in kids:
            if k_rel.feasible is not None:
                self._offer(*k_rel.feasible)
        kids.sort(key=lambda t: (-t[0].bound, t[1]))
        for k_rel, _, k in kids:
            self._dfs(k, k_rel)

    def _assignment(self, decisions: tuple[Var, ...]) -> dict[Var, int]:
        m = self._model
        out: dict[Var, int] = {v: 0 for v in m.variables}
        for d in decisions:
            out[d] = 1
            if d[0] == "y":
                out[("u", d[1])] = 1
            else:
                for e in m.cycles[d[1]].edges:
                    out[("u", e)] = 1
        return out

    # -- verification helpers ----------------------------------------------------

    def exhaustive(self, model: PicefModel, max_nodes: int = 200_000) -> list[tuple[int, int]]:
        """Expand the whole tree without pruning; return (bound, best leaf
        value below) for every node.  Used to check admissibility."""
        root = self.root_state(model)
        records: list[tuple[int, int]] = []
        count = 0

        def walk(s: SearchState) -> int:
            nonlocal count
            count += 1
            if count > max_nodes:
                raise _Limit
            bound = self._relax(s).bound
            target = self._canonical_target(s)
            best = s.value
            if target is not None:
                for k in self._children(s, target):
                    best = max(best, walk(k))
            records.append((bound, best))
            return best

        walk(root)
        return records


class HighsBackend(SolverBackend):
    name = "highs"
    exact = True

    def solve(
        self,
        model: PicefModel,
        time_limit: Optional[float] = None,
        node_limit: Optional[int] = None,
    ) -> SolveResult:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import lil_matrix

        var_index = {v: i for i, v in enumerate(model.variables)}
        nvar = len(var_index)
        if nvar == 0:
            return SolveResult(SolveStatus.OPTIMAL, {}, 0, 0.0)
        c = np.zeros(nvar)
        for v, w in model.objective.items():
            c[var_index[v]] = -w
        A = lil_matrix((len(model.rows), nvar))
        lo = np.full(len(model.rows), -np.inf)
        hi = np.full(len(model.rows), np.inf)
        for r, row in enumerate(model.rows):
            for v, coef in row.coeffs:
                A[r, var_index[v]] += coef
            if row.sense in ("<=", "=="):
                hi[r] = row.rhs
            if row.sense in (">=", "=="):
                lo[r] = row.rhs
        options = {}
        if time_limit:
            options["time_limit"] = time_limit
        if node_limit:
            options["node_limit"] = node_limit
        constraints = [LinearConstraint(A.tocsr(), lo, hi)] if model.rows else []
        res = milp(
            c,
            constraints=constraints,
            integrality=np.ones(nvar),
            bounds=Bounds(0, 1),
            options=options,
        )
        if res.x is None:
            return SolveResult(SolveStatus.INFEASIBLE, {}, 0, math.inf)
        assignment = {v: int(round(res.x[i])) for v, i in var_index.items()}
        objective = model.value(assignment)
        status = SolveStatus.OPTIMAL if res.status == 0 else SolveStatus.FEASIBLE
        bound = float(-res.mip_dual_bound) if getattr(res, "mip_dual_bound", None) is not None else objective
        return SolveResult(status, assignment, objective, bound if status is SolveStatus.FEASIBLE else objective)


BACKENDS: Mapping[str, type[SolverBackend]] = {"bnb": BranchAndBound, "highs": HighsBackend}


def solve_exact(
    model: PicefModel,
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
    backend: str | SolverBackend = "bnb",
) -> SolveResult:
    solver = BACKENDS[backend]() if isinstance(backend, str) else backend
    return solver.solve(model, time_limit=time_limit, node_limit=node_limit)


@dataclass
class IlpOutcome:
    model: PicefModel
    result: SolveResult
    solution: IlpSolution
    allocation: Allocation

    @property
    def objective(self) -> int:
        return self.solution.objective


def solve_ilp(
    inst: KeiInstance,
    cycle_cap: int,
    chain_cap: int,
    budget: Optional[int],
    scheme: Optional[WeightScheme] = None,
    backend: str | SolverBackend = "bnb",
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
    strict_pairs: bool = True,
    model: Optional[PicefModel] = None,
) -> IlpOutcome:
    """Build the cycle/chain model for ``inst`` and solve it.

    Pass a prebuilt ``model`` (same instance and caps) to skip cycle
    enumeration; only its budget is replaced.
    """
    from .picef import extract_solution, picef_model, with_budget

    if model is None:
        model = picef_model(inst, cycle_cap, chain_cap, budget, scheme, strict_pairs)
    elif model.budget != budget:
        model = with_budget(model, budget)
    result = solve_exact(model, time_limit, node_limit, backend)
    solution, allocation = extract_solution(model, result.assignment, inst)
    return IlpOutcome(model, result, solution, allocation)
