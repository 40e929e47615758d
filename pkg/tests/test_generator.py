import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kei.core import model_class, ModelClass, validate_instance
from kei.generator import (
    SPARSE_POOL,
    GeneratorConfig,
    GeneratorConfigError,
    augment_half_edges,
    generate,
    generate_pool,
    load_config,
)
from kei.core import KeiInstance, instance_to_json
from kei.picef import build_pool_graph

# donor blood type -> recipient blood types it can serve, written out by hand
ABO = {"O": {"O", "A", "B", "AB"}, "A": {"A", "AB"}, "B": {"B", "AB"}, "AB": {"AB"}}


def recount_candidates(inst):
    n = 0
    for r in range(inst.n):
        for d in range(inst.m):
            if d == inst.donor_of(r) or d in inst.compat[r] or d in inst.half[r]:
                continue
            if inst.recipients[r].blood.value in ABO[inst.donors[d].blood.value]:
                n += 1
    return n


def n_half(inst):
    return sum(len(h) for h in inst.half)


def test_empty_pool():
    inst = generate(GeneratorConfig(n_vertices=0))
    assert inst.n == inst.m == 0


def test_same_seed_same_instance():
    cfg = GeneratorConfig(seed=9, alpha=0.3)
    a, b = generate_pool(cfg), generate_pool(cfg)
    assert json.dumps(instance_to_json(a)) == json.dumps(instance_to_json(b))
    assert generate_pool(GeneratorConfig(seed=10, alpha=0.3)) != a


def test_default_pool_smoke():
    inst = generate(GeneratorConfig())
    assert validate_instance(inst).ok
    assert len(inst.altruists()) == math.floor(0.05 * 64 + 0.5)
    assert model_class(inst) is ModelClass.BM
    build_pool_graph(inst)


def test_alpha_zero_is_identity():
    base = generate(GeneratorConfig(seed=3))
    assert augment_half_edges(base, 0.0, 3) == base


def test_alpha_one_takes_every_candidate():
    base = generate(GeneratorConfig(n_vertices=24, seed=3))
    full = augment_half_edges(base, 1.0, 3)
    assert n_half(full) == recount_candidates(base)
    assert recount_candidates(full) == 0
    assert full.compat == base.compat


def test_exact_count_matches_recount():
    base = generate(GeneratorConfig(seed=7))
    aug = augment_half_edges(base, 0.2, 7)
    assert n_half(aug) == math.floor(0.2 * recount_candidates(base) + 0.5)


def test_half_edges_respect_blood_and_own_donor():
    for seed in range(5):
        inst = generate_pool(GeneratorConfig(seed=seed, alpha=0.5))
        for r in range(inst.n):
            assert not inst.compat[r] & inst.half[r]
            assert inst.donor_of(r) not in inst.half[r]
            for d in inst.half[r]:
                assert inst.recipients[r].blood.value in ABO[inst.donors[d].blood.value]


def test_own_donor_never_compatible():
    inst = generate(GeneratorConfig(seed=1, crossmatch_pass=1.0))
    assert not any(inst.is_own_compatible(r) for r in range(inst.n))


def test_ndd_switch():
    base = generate(GeneratorConfig(seed=2))
    ndds = set(base.altruists())
    without = augment_half_edges(base, 1.0, 2, include_ndd=False)
    assert not any(h & ndds for h in without.half)
    with_ndd = augment_half_edges(base, 1.0, 2, include_ndd=True)
    assert any(h & ndds for h in with_ndd.half)


def test_bernoulli_mode_is_seeded():
    base = generate(GeneratorConfig(seed=2))
    a = augment_half_edges(base, 0.3, 5, bernoulli=True)
    assert a == augment_half_edges(base, 0.3, 5, bernoulli=True)
    assert 0 < n_half(a) < recount_candidates(base)


def test_missing_blood_types():
    inst = KeiInstance.build(1, 2, [(0, 0)])
    with pytest.raises(Exception, match="blood"):
        augment_half_edges(inst, 0.5, 0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 1.5},
        {"sensitized_fraction": -0.1},
        {"blood_type_distribution": (0.5, 0.5, 0.5, 0.0)},
        {"n_vertices": -1},
        {"seed": -1},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(GeneratorConfigError):
        GeneratorConfig(**kwargs)


def test_config_file_round_trip(tmp_path):
    cfg = GeneratorConfig(n_vertices=32, alpha=0.1, seed=4, **SPARSE_POOL)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    assert load_config(path) == cfg
    data = cfg.to_json()
    data["colour"] = 1
    with pytest.raises(GeneratorConfigError, match="unknown"):
        GeneratorConfig.from_json(data)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 1), st.integers(0, 40))
def test_augmentation_invariants(seed, alpha, n):
    base = generate(GeneratorConfig(n_vertices=n, seed=seed))
    aug = augment_half_edges(base, alpha, seed)
    assert validate_instance(aug).ok
    assert aug.compat == base.compat
    assert n_half(aug) == math.floor(alpha * recount_candidates(base) + 0.5)
