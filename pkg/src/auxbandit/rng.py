"""Counter-based random streams keyed by (seed, replication, phase, ...).

Every stream is an independent Philox generator whose key is derived with
``SeedSequence`` from the base seed and a spawn key, so adding a consumer
never shifts another consumer's draws.
"""
from __future__ import annotations

import zlib

import numpy as np

PHASES = {"arrivals": 0, "aux-noise": 1, "reward-noise": 2, "policy": 3, "replay": 4, "corpus": 5}


def label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def stream(seed: int, *key) -> np.random.Generator:
    """Return the generator for ``seed`` and a hierarchical key.

    String key parts are phase names (see ``PHASES``) or free-form labels,
    which are hashed with CRC32.
    """
    parts = []
    for part in key:
        if isinstance(part, str):
            parts.append(PHASES.get(part, label_key(part)))
        else:
            parts.append(int(part))
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(parts))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(base_seed: int, replication: int) -> int:
    """64-bit seed of replication ``replication`` under ``base_seed``."""
    ss = np.random.SeedSequence(int(base_seed) & (2**64 - 1), spawn_key=(int(replication),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
