"""Domain model for kidney exchange with immunosuppressants.

A market is a set of recipients and donors, a partial pairing between them,
and for every recipient a partition of the donors into compatible (C),
half-compatible (H) and incompatible donors.  Incompatible donors are not
stored; they are whatever is in neither C nor H.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

FORMAT_VERSION = 1


class KeiError(Exception):
    """Base class for errors raised by this package."""


class ModelClassError(KeiError):
    """An operation needs a model class the instance does not belong to."""


class InfeasibleAllocationError(KeiError):
    """An allocation violates one of the allocation invariants."""


class InstanceFormatError(KeiError):
    """A serialized instance could not be parsed."""


class BloodType(str, Enum):
    O = "O"
    A = "A"
    B = "B"
    AB = "AB"

    def can_donate_to(self, other: "BloodType") -> bool:
        if self is BloodType.O:
            return True
        if self is BloodType.AB:
            return other is BloodType.AB
        return other is self or other is BloodType.AB


class ModelClass(str, Enum):
    BM = "BM"
    SBM = "SBM"
    GM = "GM"


@dataclass(frozen=True)
class Recipient:
    id: int
    blood: Optional[BloodType] = None
    sensitized: bool = False


@dataclass(frozen=True)
class Donor:
    id: int
    blood: Optional[BloodType] = None
    altruistic: bool = False


@dataclass(frozen=True)
class KeiInstance:
    """An exchange market.

    ``pairs`` holds ``(recipient, donor)`` couples that entered together.
    ``compat[i]`` and ``half[i]`` are the donor ids recipient ``i`` is
    compatible and half-compatible with.
    """

    recipients: tuple[Recipient, ...]
    donors: tuple[Donor, ...]
    pairs: tuple[tuple[int, int], ...]
    compat: tuple[frozenset[int], ...]
    half: tuple[frozenset[int], ...]
    _donor_of: dict = field(init=False, repr=False, compare=False)
    _recipient_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_donor_of", {r: d for r, d in self.pairs})
        object.__setattr__(self, "_recipient_of", {d: r for r, d in self.pairs})

    @classmethod
    def build(
        cls,
        n_recipients: int,
        n_donors: int,
        pairs: Iterable[tuple[int, int]],
        compat: Optional[Mapping[int, Iterable[int]]] = None,
        half: Optional[Mapping[int, Iterable[int]]] = None,
        recipient_blood: Optional[Mapping[int, BloodType]] = None,
        donor_blood: Optional[Mapping[int, BloodType]] = None,
        sensitized: Iterable[int] = (),
    ) -> "KeiInstance":
        """Convenience constructor; donors without a pair become altruistic."""
        pairs = tuple(sorted((int(r), int(d)) for r, d in pairs))
        paired_donors = {d for _, d in pairs}
        compat = compat or {}
        half = half or {}
        recipient_blood = recipient_blood or {}
        donor_blood = donor_blood or {}
        sens = set(sensitized)
        return cls(
            recipients=tuple(
                Recipient(i, recipient_blood.get(i), i in sens) for i in range(n_recipients)
            ),
            donors=tuple(
                Donor(j, donor_blood.get(j), j not in paired_donors) for j in range(n_donors)
            ),
            pairs=pairs,
            compat=tuple(frozenset(compat.get(i, ())) for i in range(n_recipients)),
            half=tuple(frozenset(half.get(i, ())) for i in range(n_recipients)),
        )

    @property
    def n(self) -> int:
        return len(self.recipients)

    @property
    def m(self) -> int:
        return len(self.donors)

    def donor_of(self, r: int) -> Optional[int]:
        return self._donor_of.get(r)

    def recipient_of(self, d: int) -> Optional[int]:
        return self._recipient_of.get(d)

    def singles(self) -> list[int]:
        """Recipients without a paired donor."""
        return [r.id for r in self.recipients if r.id not in self._donor_of]

    def altruists(self) -> list[int]:
        """Donors without a paired recipient."""
        return [d.id for d in self.donors if d.id not in self._recipient_of]

    def is_own_compatible(self, r: int) -> bool:
        d = self.donor_of(r)
        return d is not None and d in self.compat[r]

    def incompatible(self, r: int) -> frozenset[int]:
        return frozenset(range(self.m)) - self.compat[r] - self.half[r]

    def half_edge_count(self) -> int:
        return sum(len(h) for h in self.half)

    def replace_sets(
        self, compat: Iterable[frozenset[int]], half: Iterable[frozenset[int]]
    ) -> "KeiInstance":
        return KeiInstance(self.recipients, self.donors, self.pairs, tuple(compat), tuple(half))


@dataclass(frozen=True)
class Allocation:
    """Recipient -> donor assignment; ``suppressed`` are the recipients whose
    donor is half-compatible."""

    assignment: Mapping[int, int]
    suppressed: frozenset[int]

    @classmethod
    def from_assignment(cls, inst: KeiInstance, assignment: Mapping[int, int]) -> "Allocation":
        assignment = dict(sorted(assignment.items()))
        suppressed = frozenset(r for r, d in assignment.items() if d in inst.half[r])
        return cls(assignment, suppressed)

    @classmethod
    def empty(cls) -> "Allocation":
        return cls({}, frozenset())

    def __len__(self) -> int:
        return len(self.assignment)

    def to_json(self) -> dict:
        return {
            "assignment": [[r, d] for r, d in sorted(self.assignment.items())],
            "suppressed": sorted(self.suppressed),
        }


@dataclass(frozen=True)
class AllocationStats:
    CO: int
    HC: int
    TR: int


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_instance(inst: KeiInstance) -> ValidationReport:
    """Collect every invariant violation instead of stopping at the first."""
    problems: list[str] = []
    for pos, r in enumerate(inst.recipients):
        if r.id != pos:
            problems.append(f"recipient ids not contiguous at position {pos} (id {r.id})")
    for pos, d in enumerate(inst.donors):
        if d.id != pos:
            problems.append(f"donor ids not contiguous at position {pos} (id {d.id})")
    if len(inst.compat) != inst.n or len(inst.half) != inst.n:
        problems.append("compat/half must have one entry per recipient")
        return ValidationReport(tuple(problems))

    seen_r: set[int] = set()
    seen_d: set[int] = set()
    for r, d in inst.pairs:
        if not 0 <= r < inst.n:
            problems.append(f"pair references unknown recipient r_{r}")
        if not 0 <= d < inst.m:
            problems.append(f"pair references unknown donor d_{d}")
        if r in seen_r:
            problems.append(f"recipient r_{r} paired twice")
        if d in seen_d:
            problems.append(f"donor d_{d} paired twice")
        seen_r.add(r)
        seen_d.add(d)
    for d in inst.donors:
        paired = d.id in seen_d
        if d.altruistic == paired:
            problems.append(
                f"donor d_{d.id} altruistic flag must be {not paired} (paired={paired})"
            )
    for i in range(inst.n):
        overlap = inst.compat[i] & inst.half[i]
        if overlap:
            problems.append(f"C/H overlap at r_{i}: donors {sorted(overlap)}")
        for d in sorted(inst.compat[i] | inst.half[i]):
            if not 0 <= d < inst.m:
                problems.append(f"r_{i} references unknown donor d_{d}")
    return ValidationReport(tuple(problems))


def is_silver_bullet(inst: KeiInstance) -> bool:
    """True when no recipient has an incompatible donor.

    Holds for some BM instances too (every donor compatible with everyone).
    """
    everyone = frozenset(range(inst.m))
    return all(inst.compat[i] | inst.half[i] == everyone for i in range(inst.n))


def model_class(inst: KeiInstance) -> ModelClass:
    if all(not h for h in inst.half):
        return ModelClass.BM
    if is_silver_bullet(inst):
        return ModelClass.SBM
    return ModelClass.GM


def check_feasible(inst: KeiInstance, alloc: Allocation) -> None:
    """Raise InfeasibleAllocationError if ``alloc`` breaks an allocation invariant."""
    used: dict[int, int] = {}
    for r, d in alloc.assignment.items():
        if not 0 <= r < inst.n:
            raise InfeasibleAllocationError(f"unknown recipient r_{r}")
        if d in used:
            raise InfeasibleAllocationError(
                f"injectivity: donor d_{d} assigned to r_{used[d]} and r_{r}"
            )
        used[d] = r
        if d not in inst.compat[r] and d not in inst.half[r]:
            raise InfeasibleAllocationError(f"compatibility: d_{d} is incompatible with r_{r}")
    expected = {r for r, d in alloc.assignment.items() if d in inst.half[r]}
    if set(alloc.suppressed) != expected:
        raise InfeasibleAllocationError(
            f"suppressed set {sorted(alloc.suppressed)} must equal {sorted(expected)}"
        )


def stats(inst: KeiInstance, alloc: Allocation) -> AllocationStats:
    check_feasible(inst, alloc)
    hc = len(alloc.suppressed)
    tr = len(alloc.assignment)
    return AllocationStats(CO=tr - hc, HC=hc, TR=tr)


def check_strong_ir(inst: KeiInstance, alloc: Allocation) -> bool:
    """A paired donor gives only if her recipient receives, and a recipient
    whose own donor is compatible never receives a half-compatible kidney."""
    used = set(alloc.assignment.values())
    for r, d in inst.pairs:
        got = alloc.assignment.get(r)
        if d in used and got is None:
            return False
        if got is not None and d in inst.compat[r] and got not in inst.compat[r]:
            return False
    return True


def check_ir(inst: KeiInstance, alloc: Allocation) -> bool:
    for r, d in inst.pairs:
        if d in inst.compat[r]:
            got = alloc.assignment.get(r)
            if got is None or got not in inst.compat[r]:
                return False
    return True


# -- serialization -----------------------------------------------------------


def instance_to_json(inst: KeiInstance) -> dict:
    def person(p, extra: str) -> dict:
        out = {"id": p.id}
        if p.blood is not None:
            out["blood"] = p.blood.value
        out[extra] = getattr(p, extra)
        return out

    return {
        "version": FORMAT_VERSION,
        "recipients": [person(r, "sensitized") for r in inst.recipients],
        "donors": [person(d, "altruistic") for d in inst.donors],
        "pairs": [[r, d] for r, d in inst.pairs],
        "compat": {str(i): sorted(c) for i, c in enumerate(inst.compat) if c},
        "half": {str(i): sorted(h) for i, h in enumerate(inst.half) if h},
    }


def instance_from_json(data: Mapping) -> KeiInstance:
    if data.get("version") != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported instance version {data.get('version')!r}")
    try:
        recipients = []
        for entry in data["recipients"]:
            if isinstance(entry, int):
                entry = {"id": entry}
            blood = entry.get("blood")
            recipients.append(
                Recipient(
                    int(entry["id"]),
                    BloodType(blood) if blood is not None else None,
                    bool(entry.get("sensitized", False)),
                )
            )
        pairs = tuple((int(r), int(d)) for r, d in data.get("pairs", []))
        paired = {d for _, d in pairs}
        donors = []
        for entry in data["donors"]:
            if isinstance(entry, int):
                entry = {"id": entry}
            blood = entry.get("blood")
            donors.append(
                Donor(
                    int(entry["id"]),
                    BloodType(blood) if blood is not None else None,
                    bool(entry.get("altruistic", int(entry["id"]) not in paired)),
                )
            )
        n = len(recipients)
        compat = {int(k): v for k, v in data.get("compat", {}).items()}
        half = {int(k): v for k, v in data.get("half", {}).items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc}") from exc
    return KeiInstance(
        recipients=tuple(recipients),
        donors=tuple(donors),
        pairs=pairs,
        compat=tuple(frozenset(int(d) for d in compat.get(i, ())) for i in range(n)),
        half=tuple(frozenset(int(d) for d in half.get(i, ())) for i in range(n)),
    )


def load_instance(path: str | Path) -> KeiInstance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))


def save_instance(inst: KeiInstance, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_json(inst), fh, indent=1, sort_keys=False)
        fh.write("\n")
