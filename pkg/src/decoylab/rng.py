"""Seeded randomness: stable seed derivation and draw-counted generators."""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts) -> int:
    """Fold arbitrary labels into a 64-bit seed.

    Uses sha256 over the stringified parts, so the result is stable across
    processes and interpreter runs (unlike ``hash()``).
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class CountingRng:
    """``random.Random`` wrapper that counts every draw made through it.

    The cumulative draw count is the replay bookkeeping unit: event logs
    record how many draws a session has consumed after each command, so a
    replayer can detect drift without comparing generator internals.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.draws = 0
        self._rng = random.Random(seed)

    def random(self) -> float:
        self.draws += 1
        return self._rng.random()

    def uniform(self, lo: float, hi: float) -> float:
        self.draws += 1
        return self._rng.uniform(lo, hi)

    def randint(self, lo: int, hi: int) -> int:
        self.draws += 1
        return self._rng.randint(lo, hi)

    def choice(self, seq):
        self.draws += 1
        return self._rng.choice(seq)

    def sample(self, seq, k: int) -> list:
        self.draws += 1
        return self._rng.sample(seq, k)

    def shuffle(self, seq) -> None:
        self.draws += 1
        self._rng.shuffle(seq)
