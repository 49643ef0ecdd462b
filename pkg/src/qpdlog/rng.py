"""Deterministic named randomness streams.

One master seed fans out to independent per-purpose streams, so adding or
reordering random draws in one component never perturbs another.  Streams
are plain ``random.Random`` instances seeded from SHA-256(seed || name).
"""

import hashlib
import random


def stream(seed: int, name: str) -> random.Random:
    """Return the deterministic stream for (seed, name)."""
    h = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return random.Random(int.from_bytes(h, "big"))


class SeedSplitter:
    """Hands out named sub-streams of a master seed, remembering names used."""

    def __init__(self, seed: int):
        self.seed = seed
        self.used: list[str] = []

    def get(self, name: str) -> random.Random:
        self.used.append(name)
        return stream(self.seed, name)
