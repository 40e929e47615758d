"""Objective encodings as edge weights.

Lexicographic objectives are folded into one integer weight with a scale
constant ``big``.  ``big`` defaults to ``n + 1``: with ``big = n`` the
(TR, -HC) weights can tie two allocations whose TR differs by one when HC
differs by n, so the extra unit keeps every comparison strict.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

from .core import Allocation, AllocationStats, KeiInstance, stats


class SchemeKind(str, Enum):
    MAX_TR = "max-tr"
    MAX_CO_BM = "max-co-bm"
    LEX_CO_TR = "lex-co-tr"
    LEX_CO_NEG_HC = "lex-co-neg-hc"
    LEX_TR_NEG_HC = "lex-tr-neg-hc"
    LEX_TR_CO = "lex-tr-co"
    CUSTOM = "custom"


# schemes whose compatible weight strictly exceeds the half-compatible weight
HALF_LESS_DESIRABLE = frozenset(
    {
        SchemeKind.MAX_CO_BM,
        SchemeKind.LEX_CO_TR,
        SchemeKind.LEX_CO_NEG_HC,
        SchemeKind.LEX_TR_NEG_HC,
        SchemeKind.LEX_TR_CO,
    }
)


@dataclass(frozen=True)
class WeightScheme:
    kind: SchemeKind
    big: Optional[int] = None
    # custom scheme only
    compatible_gain: int = 1
    half_gain: Optional[int] = 1
    waiting_gain: int = 0
    pair_compatible: Mapping[tuple[int, int], int] = field(default_factory=dict)
    pair_half: Mapping[tuple[int, int], Optional[int]] = field(default_factory=dict)
    pair_waiting: Mapping[int, int] = field(default_factory=dict)

    @classmethod
    def of(cls, kind: SchemeKind | str, big: Optional[int] = None) -> "WeightScheme":
        return cls(SchemeKind(kind), big)

    @classmethod
    def custom(
        cls,
        compatible: int = 1,
        half: Optional[int] = 1,
        waiting: int = 0,
        pair_compatible: Optional[Mapping[tuple[int, int], int]] = None,
        pair_half: Optional[Mapping[tuple[int, int], Optional[int]]] = None,
        pair_waiting: Optional[Mapping[int, int]] = None,
    ) -> "WeightScheme":
        return cls(
            SchemeKind.CUSTOM,
            compatible_gain=compatible,
            half_gain=half,
            waiting_gain=waiting,
            pair_compatible=dict(pair_compatible or {}),
            pair_half=dict(pair_half or {}),
            pair_waiting=dict(pair_waiting or {}),
        )

    def resolve(self, inst: KeiInstance) -> "WeightScheme":
        """Fix ``big`` for a concrete instance."""
        if self.big is not None:
            if self.big <= inst.n:
                raise ValueError(f"big={self.big} must exceed n={inst.n}")
            return self
        return replace(self, big=inst.n + 1)

    def _big(self) -> int:
        if self.big is None:
            raise ValueError("scheme not resolved; call resolve(inst) first")
        return self.big

    def compatible_weight(self, r: int, d: int) -> int:
        k = self.kind
        if k in (SchemeKind.MAX_TR, SchemeKind.MAX_CO_BM):
            return 1
        if k is SchemeKind.LEX_TR_CO:
            return self._big() + 1
        if k is SchemeKind.CUSTOM:
            return self.pair_compatible.get((r, d), self.compatible_gain)
        return self._big()

    def half_weight(self, r: int, d: int) -> Optional[int]:
        """Weight of a half-compatible transplant; None means forbidden."""
        k = self.kind
        if k is SchemeKind.MAX_TR:
            return 1
        if k is SchemeKind.MAX_CO_BM:
            return None
        if k is SchemeKind.LEX_CO_TR:
            return 1
        if k is SchemeKind.LEX_CO_NEG_HC:
            return -1
        if k is SchemeKind.LEX_TR_NEG_HC:
            return self._big() - 1
        if k is SchemeKind.LEX_TR_CO:
            return self._big()
        return self.pair_half.get((r, d), self.half_gain)

    def private_weight(self, r: int) -> int:
        if self.kind is SchemeKind.CUSTOM:
            return self.pair_waiting.get(r, self.waiting_gain)
        return 0

    @property
    def uniform_half(self) -> bool:
        return self.kind is not SchemeKind.CUSTOM

    def score(self, inst: KeiInstance, alloc: Allocation) -> int:
        """Total edge weight of the perfect matching behind ``alloc``."""
        s = self.resolve(inst)
        total = 0
        for r in range(inst.n):
            d = alloc.assignment.get(r)
            if d is None:
                total += s.private_weight(r)
            elif d in inst.compat[r]:
                total += s.compatible_weight(r, d)
            else:
                w = s.half_weight(r, d)
                if w is None:
                    raise ValueError(f"scheme {s.kind.value} forbids half-compatible r_{r}<-d_{d}")
                total += w
        return total

    def key(self, inst: KeiInstance, alloc: Allocation) -> tuple[int, ...]:
        """The (lexicographic) objective value the scheme maximizes."""
        st: AllocationStats = stats(inst, alloc)
        k = self.kind
        if k is SchemeKind.MAX_TR:
            return (st.TR,)
        if k is SchemeKind.MAX_CO_BM:
            return (st.CO,)
        if k is SchemeKind.LEX_CO_TR:
            return (st.CO, st.TR)
        if k is SchemeKind.LEX_CO_NEG_HC:
            return (st.CO, -st.HC)
        if k is SchemeKind.LEX_TR_NEG_HC:
            return (st.TR, -st.HC)
        if k is SchemeKind.LEX_TR_CO:
            return (st.TR, st.CO)
        return (self.score(inst, alloc),)

    def admits(self, inst: KeiInstance, alloc: Allocation) -> bool:
        """False if the allocation uses an edge the scheme forbids."""
        s = self.resolve(inst)
        return all(
            s.half_weight(r, d) is not None
            for r, d in alloc.assignment.items()
            if d in inst.half[r]
        )


def scheme_from_json(data: Mapping) -> WeightScheme:
    """Parse ``{"kind": ..., "big": ...}`` or a custom gain file."""
    kind = SchemeKind(data.get("kind", "custom"))
    if kind is not SchemeKind.CUSTOM:
        return WeightScheme(kind, data.get("big"))

    def pairs(key: str) -> dict:
        return {(int(r), int(d)): w for r, d, w in data.get(key, [])}

    return WeightScheme.custom(
        compatible=int(data.get("compatible", 1)),
        half=data.get("half", 1),
        waiting=int(data.get("waiting", 0)),
        pair_compatible=pairs("pair_compatible"),
        pair_half=pairs("pair_half"),
        pair_waiting={int(r): int(w) for r, w in data.get("pair_waiting", [])},
    )
