"""Seeded random instances for property and equivalence tests."""

import random

from kei.core import KeiInstance


def random_instance(seed, n_max=8, p_compat=0.25, p_half=0.3, sbm=False, n_min=1):
    rng = random.Random(seed)
    n_pairs = rng.randint(n_min, n_max)
    n_single = rng.randint(0, max(0, n_max - n_pairs)) if rng.random() < 0.4 else 0
    n_alt = rng.randint(0, 2) if rng.random() < 0.5 else 0
    n = n_pairs + n_single
    m = n_pairs + n_alt
    pairs = [(i, i) for i in range(n_pairs)]
    compat, half = {}, {}
    for r in range(n):
        c, h = [], []
        for d in range(m):
            x = rng.random()
            if x < p_compat:
                c.append(d)
            elif sbm or x < p_compat + p_half:
                h.append(d)
        compat[r], half[r] = c, h
    return KeiInstance.build(n, m, pairs, compat, half)
