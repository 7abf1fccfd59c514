"""Deterministic derivation of independent generator streams from a master seed."""

from __future__ import annotations

import numpy as np

# Domain tags keep seeds for different purposes from colliding.
TREE = 0
RUN = 1
SPLIT = 2
BIAS_VARIANCE = 3


def derive_seed(master_seed: int, *keys: int) -> int:
    """Hash ``(master_seed, *keys)`` to a 32-bit seed."""
    ss = np.random.SeedSequence([int(master_seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def tree_rng(master_seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), TREE, int(tree_index)]))
