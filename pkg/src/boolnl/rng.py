"""Portable seeded bit streams: SplitMix64 seeding a xoshiro256** generator.

A stream is addressed by ``(master_seed, stream_index)``. The generator state
is four consecutive SplitMix64 outputs started from
``master_seed ^ (stream_index * GOLDEN)``, all arithmetic mod 2**64.
"""

from dataclasses import dataclass

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

#: Bumped whenever the derivation below changes; echoed into experiment metadata.
FORMAT_VERSION = "splitmix64-xoshiro256ss-v1"


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(state):
    """One SplitMix64 step. Returns ``(new_state, output)``."""
    state = (state + GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman and Vigna)."""

    __slots__ = ("s",)

    def __init__(self, state):
        s = [int(v) & MASK64 for v in state]
        if len(s) != 4:
            raise ValueError("xoshiro256** needs four 64-bit state words")
        if not any(s):
            raise ValueError("xoshiro256** state must not be all zero")
        self.s = s

    @classmethod
    def from_seed(cls, seed):
        sm = seed & MASK64
        state = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            state.append(out)
        return cls(state)

    def next(self):
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def words(self, count):
        return [self.next() for _ in range(count)]


@dataclass(frozen=True)
class SeedSpec:
    """Address of one reproducible random stream."""

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= v <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def generator(self):
        mixed = self.master_seed ^ ((self.stream_index * GOLDEN) & MASK64)
        return Xoshiro256StarStar.from_seed(mixed)


def derive_stream(seed, i):
    """Stream ``i`` relative to ``seed``: same master seed, index offset by ``i`` (mod 2**64)."""
    if i < 0:
        raise ValueError("stream offset must be non-negative")
    return SeedSpec(seed.master_seed, (seed.stream_index + i) & MASK64)
