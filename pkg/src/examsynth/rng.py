"""Pinned, portable PRNG and per-record seed derivation.

Reproducibility of the styled output requires a generator that behaves
identically on every platform and Python version, so this module pins the
algorithm instead of relying on ``random.Random`` (whose internals are an
implementation detail of CPython).

Generator: xorshift64* (Vigna's variant of Marsaglia's xorshift), state is
one nonzero 64-bit word. One step is

    x ^= x >> 12
    x ^= (x << 25) mod 2**64
    x ^= x >> 27
    output = (x * 0x2545F4914F6CDD1D) mod 2**64

Per-record seeds come from SHA-256 over ``"{global_seed}\\x1f{record_id}"``
(UTF-8, 0x1f unit separator), taking the first 8 digest bytes big-endian.
That makes every record's stream a pure function of (global seed, record
id): processing order and worker count cannot change the output.
"""

from __future__ import annotations

import hashlib

_MASK64 = (1 << 64) - 1
_MULT = 0x2545F4914F6CDD1D
# Substitute state for seed 0 (xorshift state must be nonzero): the 64-bit
# golden-ratio constant, a fixed arbitrary odd word.
_ZERO_SEED_SUBSTITUTE = 0x9E3779B97F4A7C15


def derive_record_seed(global_seed: int, record_id: str) -> int:
    """Stable 64-bit seed for one record under one global seed."""
    digest = hashlib.sha256(f"{global_seed}\x1f{record_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


class XorShift64Star:
    """xorshift64* stream; every draw below consumes a documented number of steps."""

    def __init__(self, seed: int) -> None:
        seed &= _MASK64
        self._state = seed if seed != 0 else _ZERO_SEED_SUBSTITUTE

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & _MASK64

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        # Largest multiple of n that fits in 64 bits; values at or above it
        # would bias the low residues, so they are redrawn.
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % n

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def weighted_choice(self, items, weights) -> int:
        """Index drawn proportionally to integer ``weights`` (one randbelow draw)."""
        if len(items) != len(weights):
            raise ValueError("items and weights differ in length")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        total = sum(weights)
        if total <= 0:
            raise ValueError("weights sum to zero")
        point = self.randbelow(total)
        acc = 0
        for index, weight in enumerate(weights):
            acc += weight
            if point < acc:
                return index
        raise AssertionError("unreachable: point < total by construction")
