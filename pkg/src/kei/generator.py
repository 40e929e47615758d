"""Synthetic kidney exchange pools.

A pool of ``n_vertices`` vertices is split into incompatible pairs and
non-directed donors.  Fully compatible edges come from blood-type checks
followed by a crossmatch draw; half-compatible edges are then added among
the remaining blood-compatible, unconnected (donor, recipient) pairs.

The default probabilities are synthetic and roughly follow a US pool.
They are not calibrated against any registry.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .core import BloodType, KeiError, KeiInstance

CONFIG_VERSION = 1
BLOOD_ORDER = (BloodType.O, BloodType.A, BloodType.B, BloodType.AB)

# stream tags keep base generation and augmentation independent
_BASE_STREAM = 0x6B65
_HALF_STREAM = 0x6861


class GeneratorConfigError(KeiError, ValueError):
    pass


# A sparser pool: most recipients highly sensitized, few crossmatches pass.
# At h = 0 it leaves roughly half of a 64-vertex pool unmatched, so a small
# suppressant budget has room to help.  Use as overrides:
# GeneratorConfig(**SPARSE_POOL, ...).
SPARSE_POOL = {
    "sensitized_fraction": 0.6,
    "crossmatch_pass": 0.2,
    "crossmatch_pass_sensitized": 0.02,
}


@dataclass(frozen=True)
class GeneratorConfig:
    n_vertices: int = 64
    ndd_fraction: float = 0.05
    blood_type_distribution: tuple[float, float, float, float] = (0.48, 0.34, 0.14, 0.04)
    sensitized_fraction: float = 0.2
    crossmatch_pass: float = 0.7
    crossmatch_pass_sensitized: float = 0.1
    alpha: float = 0.0
    seed: int = 0
    include_ndd_half_edges: bool = True
    bernoulli: bool = False

    def __post_init__(self) -> None:
        if self.n_vertices < 0:
            raise GeneratorConfigError(f"n_vertices must be non-negative, got {self.n_vertices}")
        probs = {
            "ndd_fraction": self.ndd_fraction,
            "sensitized_fraction": self.sensitized_fraction,
            "crossmatch_pass": self.crossmatch_pass,
            "crossmatch_pass_sensitized": self.crossmatch_pass_sensitized,
            "alpha": self.alpha,
        }
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise GeneratorConfigError(f"{name} must lie in [0, 1], got {p}")
        dist = tuple(float(p) for p in self.blood_type_distribution)
        if len(dist) != 4 or any(p < 0 for p in dist) or not math.isclose(sum(dist), 1.0, abs_tol=1e-9):
            raise GeneratorConfigError(
                f"blood_type_distribution must be 4 non-negative numbers summing to 1, got {dist}"
            )
        object.__setattr__(self, "blood_type_distribution", dist)
        if not 0 <= self.seed < 2**64:
            raise GeneratorConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_json(self) -> dict:
        out = asdict(self)
        out["blood_type_distribution"] = list(self.blood_type_distribution)
        return {"version": CONFIG_VERSION, **out}

    @classmethod
    def from_json(cls, data: dict) -> "GeneratorConfig":
        data = dict(data)
        version = data.pop("version", None)
        if version != CONFIG_VERSION:
            raise GeneratorConfigError(f"unsupported generator config version {version!r}")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise GeneratorConfigError(f"unknown generator config keys: {sorted(unknown)}")
        if "blood_type_distribution" in data:
            data["blood_type_distribution"] = tuple(data["blood_type_distribution"])
        return cls(**data)


def load_config(path: Union[str, Path]) -> GeneratorConfig:
    return GeneratorConfig.from_json(json.loads(Path(path).read_text()))


def _rng(tag: int, seed: int) -> np.random.Generator:
    return np.random.default_rng([tag, seed])


def generate(config: GeneratorConfig) -> KeiInstance:
    """Base pool with fully compatible edges only.

    Pairs take recipient and donor ids ``0..P-1`` (recipient i with donor i);
    non-directed donors follow as donors ``P..P+N-1``.
    """
    rng = _rng(_BASE_STREAM, config.seed)
    n = config.n_vertices
    n_ndd = math.floor(config.ndd_fraction * n + 0.5)
    n_pairs = n - n_ndd

    dist = np.array(config.blood_type_distribution)
    r_blood = [BLOOD_ORDER[k] for k in rng.choice(4, size=n_pairs, p=dist)]
    d_blood = [BLOOD_ORDER[k] for k in rng.choice(4, size=n, p=dist)]
    sensitized = [i for i, x in enumerate(rng.random(n_pairs)) if x < config.sensitized_fraction]
    sens = set(sensitized)
    draws = rng.random((n_pairs, n))

    compat: dict[int, list[int]] = {}
    for r in range(n_pairs):
        p = config.crossmatch_pass_sensitized if r in sens else config.crossmatch_pass
        compat[r] = [
            d
            for d in range(n)
            if d != r and d_blood[d].can_donate_to(r_blood[r]) and draws[r, d] < p
        ]
    return KeiInstance.build(
        n_pairs,
        n,
        [(i, i) for i in range(n_pairs)],
        compat=compat,
        recipient_blood=dict(enumerate(r_blood)),
        donor_blood=dict(enumerate(d_blood)),
        sensitized=sensitized,
    )


def half_edge_candidates(inst: KeiInstance, include_ndd: bool = True) -> list[tuple[int, int]]:
    """Blood-compatible (recipient, donor) pairs with no edge yet, own donor excluded."""
    out = []
    for r in range(inst.n):
        rb = inst.recipients[r].blood
        if rb is None:
            raise KeiError(f"recipient r_{r} has no blood type")
        own = inst.donor_of(r)
        for donor in inst.donors:
            d = donor.id
            if donor.blood is None:
                raise KeiError(f"donor d_{d} has no blood type")
            if d == own or d in inst.compat[r] or d in inst.half[r]:
                continue
            if donor.altruistic and not include_ndd:
                continue
            if donor.blood.can_donate_to(rb):
                out.append((r, d))
    return out


def augment_half_edges(
    inst: KeiInstance,
    alpha: float,
    seed: int,
    include_ndd: bool = True,
    bernoulli: bool = False,
) -> KeiInstance:
    """Turn a fraction ``alpha`` of the candidate pairs into half-compatible edges.

    By default exactly ``round(alpha * |candidates|)`` candidates are drawn
    without replacement (halves round up); ``bernoulli=True`` instead keeps
    each candidate independently with probability ``alpha``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise GeneratorConfigError(f"alpha must lie in [0, 1], got {alpha}")
    cands = half_edge_candidates(inst, include_ndd)
    rng = _rng(_HALF_STREAM, seed)
    if bernoulli:
        keep = [c for c, x in zip(cands, rng.random(len(cands))) if x < alpha]
    else:
        k = math.floor(alpha * len(cands) + 0.5)
        order = rng.permutation(len(cands))[:k]
        keep = [cands[i] for i in sorted(order)]
    if not keep:
        return inst
    half = [set(h) for h in inst.half]
    for r, d in keep:
        half[r].add(d)
    return inst.replace_sets(inst.compat, (frozenset(h) for h in half))


def generate_pool(config: GeneratorConfig) -> KeiInstance:
    """Base pool followed by half-edge augmentation at ``config.alpha``."""
    return augment_half_edges(
        generate(config),
        config.alpha,
        config.seed,
        include_ndd=config.include_ndd_half_edges,
        bernoulli=config.bernoulli,
    )
