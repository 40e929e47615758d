"""Exhaustive reference solvers for tests and fixture generation.

Allocations are enumerated as families of vertex-disjoint exchange cycles
and altruist-initiated chains, so every enumerated allocation is an
executable exchange.  Exponential; refuses instances above ``max_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .core import Allocation, KeiError, KeiInstance
from .schemes import WeightScheme


class OracleTooLargeError(KeiError):
    pass


def _donations(inst: KeiInstance, strict_pairs: bool) -> dict[int, list[tuple[int, int]]]:
    """For each donor, the recipients it can give to as (recipient, is_half)."""
    out: dict[int, list[tuple[int, int]]] = {d: [] for d in range(inst.m)}
    for r in range(inst.n):
        protect = strict_pairs and inst.is_own_compatible(r)
        for d in inst.compat[r]:
            out[d].append((r, 0))
        if not protect:
            for d in inst.half[r]:
                out[d].append((r, 1))
    for d in out:
        out[d].sort()
    return out


def enumerate_allocations(
    inst: KeiInstance,
    h: Optional[int] = None,
    cycle_cap: Optional[int] = None,
    chain_cap: Optional[int] = None,
    strict_pairs: bool = True,
    self_loops: bool = True,
    max_n: int = 10,
) -> Iterator[Allocation]:
    """Every exchange-feasible allocation within the given limits.

    ``None`` limits are unbounded.  ``strict_pairs`` forbids half-compatible
    kidneys for recipients whose own donor is compatible.
    """
    if inst.n + inst.m > 2 * max_n:
        raise OracleTooLargeError(f"instance too large for enumeration (n={inst.n}, m={inst.m})")
    gives = _donations(inst, strict_pairs)
    budget = h if h is not None else inst.n
    cyc_cap = cycle_cap if cycle_cap is not None else inst.n
    ch_cap = chain_cap if chain_cap is not None else inst.n
    altruists = inst.altruists()
    free = set(range(inst.n))
    assign: dict[int, int] = {}

    def cycles_through(start: int, budget_left: int) -> Iterator[list[tuple[int, int]]]:
        """Simple cycles start -> ... -> start as lists of (recipient, donor)."""
        path = [start]

        def walk(at: int, used_half: int) -> Iterator[list[tuple[int, int]]]:
            d = inst.donor_of(at)
            if d is None:
                return
            for r, is_half in gives[d]:
                if used_half + is_half > budget_left:
                    continue
                if r == start:
                    if len(path) == 1 and not self_loops:
                        continue
                    yield [(path[(i + 1) % len(path)], inst.donor_of(path[i])) for i in range(len(path))]
                elif r in free and r > start and r not in path and len(path) < cyc_cap:
                    path.append(r)
                    yield from walk(r, used_half + is_half)
                    path.pop()

        yield from walk(start, 0)

    def chains_from(a: int, budget_left: int) -> Iterator[list[tuple[int, int]]]:
        steps: list[tuple[int, int]] = []

        def extend(donor: int, used_half: int) -> Iterator[list[tuple[int, int]]]:
            if len(steps) >= ch_cap:
                return
            for r, is_half in gives[donor]:
                if r not in free or used_half + is_half > budget_left:
                    continue
                steps.append((r, donor))
                free.discard(r)
                yield list(steps)
                nxt = inst.donor_of(r)
                if nxt is not None:
                    yield from extend(nxt, used_half + is_half)
                free.add(r)
                steps.pop()

        yield from extend(a, 0)

    def half_count(links: list[tuple[int, int]]) -> int:
        return sum(1 for r, d in links if d in inst.half[r])

    def place_cycles(remaining: list[int], budget_left: int) -> Iterator[Allocation]:
        while remaining and remaining[0] not in free:
            remaining = remaining[1:]
        if not remaining:
            yield Allocation.from_assignment(inst, assign)
            return
        v, rest = remaining[0], remaining[1:]
        yield from place_cycles(rest, budget_left)
        for links in list(cycles_through(v, budget_left)):
            members = [r for r, _ in links]
            if any(r not in free for r in members):
                continue
            for r, d in links:
                assign[r] = d
                free.discard(r)
            yield from place_cycles(rest, budget_left - half_count(links))
            for r, _ in links:
                del assign[r]
                free.add(r)

    def place_chains(idx: int, budget_left: int) -> Iterator[Allocation]:
        if idx == len(altruists):
            yield from place_cycles(sorted(free), budget_left)
            return
        yield from place_chains(idx + 1, budget_left)
        for links in chains_from(altruists[idx], budget_left):
            for r, d in links:
                assign[r] = d
            # chains_from already removed the members from ``free``
            yield from place_chains(idx + 1, budget_left - half_count(links))
            for r, _ in links:
                del assign[r]

    yield from place_chains(0, budget)


@dataclass(frozen=True)
class OracleResult:
    objective: tuple[int, ...]
    score: int
    witness: Allocation
    count: int  # allocations attaining the optimum


def oracle_optimum(
    inst: KeiInstance,
    scheme: WeightScheme,
    h: Optional[int] = None,
    cycle_cap: Optional[int] = None,
    chain_cap: Optional[int] = None,
    strict_pairs: bool = True,
    self_loops: bool = True,
    max_n: int = 10,
) -> OracleResult:
    best: Optional[OracleResult] = None
    for alloc in enumerate_allocations(
        inst, h, cycle_cap, chain_cap, strict_pairs, self_loops, max_n
    ):
        if not scheme.admits(inst, alloc):
            continue
        key = scheme.key(inst, alloc)
        if best is None or key > best.objective:
            best = OracleResult(key, scheme.score(inst, alloc), alloc, 1)
        elif key == best.objective:
            best = OracleResult(best.objective, best.score, best.witness, best.count + 1)
    assert best is not None  # the empty allocation is always feasible
    return best
