"""Deterministic expansion of one master seed into named sub-streams.

Every source of randomness in a run (initialization, OOV embeddings,
per-epoch schedules, subsampling) draws from its own purpose-named stream,
so adding or removing one consumer never shifts the randomness seen by the
others.
"""

from __future__ import annotations

import hashlib


def seed_for(master: int, purpose: str) -> int:
    """A 64-bit seed unique to (master, purpose)."""
    digest = hashlib.sha256(f"{int(master)}:{purpose}".encode()).hexdigest()
    return int(digest[:16], 16)
