"""Seedable, splittable random streams.

Every randomized operation in this package takes an explicit stream; nothing
touches global RNG state. Streams are backed by numpy's PCG64. A child stream
is derived from (root seed, path of labels): labels are hashed to 64-bit keys
and appended to the SeedSequence spawn key, so a (seed, path) pair names the
same stream on every platform, in every process, regardless of how much the
parent has already been used.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RandomStream"]

# Above this bound we fall back to bigint rejection sampling; numpy's bounded
# integers() is exact (Lemire rejection) only for bounds that fit in int64.
_FAST_BOUND = 1 << 62


def _key_of(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RandomStream:
    """A deterministic random stream identified by (seed, path)."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = int(seed)
        self.path = tuple(path)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def split(self, *labels) -> "RandomStream":
        """Derive an independent child stream.

        The child depends only on (seed, path, labels), never on how many
        draws the parent has made, so split(...) with the same labels always
        names the same stream.
        """
        return RandomStream(self.seed, self.path + tuple(_key_of(l) for l in labels))

    # -- state snapshots (used by the sampler's replayable tape) --

    def state(self):
        return self._gen.bit_generator.state

    def set_state(self, state) -> None:
        self._gen.bit_generator.state = state

    # -- exact uniform integers --

    def randrange(self, bound: int) -> int:
        """Exactly uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound <= _FAST_BOUND:
            return int(self._gen.integers(0, bound))
        return self._randrange_big(bound)

    def integers(self, bound: int, size: int) -> np.ndarray:
        """Batch of exactly uniform integers in [0, bound); bound must be small."""
        if not 0 < bound <= _FAST_BOUND:
            raise ValueError("bound out of range for the batched path")
        return self._gen.integers(0, bound, size=size)

    def _randrange_big(self, bound: int) -> int:
        nbits = bound.bit_length()
        words = (nbits + 63) // 64
        shift = words * 64 - nbits
        while True:
            raw = self._gen.integers(0, 1 << 64, size=words, dtype=np.uint64)
            value = int.from_bytes(raw.tobytes(), "little") >> shift
            if value < bound:
                return value

    # -- derived draws --

    def subset_positions(self, pop_size: int, k: int) -> list[int]:
        """Uniformly random k-subset of range(pop_size) (Floyd's method), sorted."""
        if k >= pop_size:
            return list(range(pop_size))
        chosen: set[int] = set()
        for j in range(pop_size - k, pop_size):
            t = self.randrange(j + 1)
            chosen.add(j if t in chosen else t)
        return sorted(chosen)

    def sample(self, items: list, k: int) -> list:
        """Uniformly random k-subset of items, in random order."""
        if k > len(items):
            raise ValueError("sample larger than population")
        perm = self._gen.permutation(len(items))
        return [items[int(i)] for i in perm[:k]]

    def shuffled(self, items: list) -> list:
        perm = self._gen.permutation(len(items))
        return [items[int(i)] for i in perm]
