"""Deterministic seed derivation.

Trial seeds come from ``(master_seed, trial)`` and node seeds from
``(trial_seed, node)``, each through numpy's ``SeedSequence`` spawn keys, so
streams are independent and do not depend on scheduling order.
"""

from __future__ import annotations

import numpy as np


def derive_seed(parent: int, *path: int) -> int:
    """A 64-bit seed for the child of ``parent`` at ``path``."""
    ss = np.random.SeedSequence(int(parent), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_seed(master_seed: int, trial: int) -> int:
    return derive_seed(master_seed, trial)


def node_seeds(parent: int, m: int) -> list[int]:
    return [derive_seed(parent, i) for i in range(m)]


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
