"""Counter-based, splittable pseudo-random generator.

The simulator needs identical streams across runs, platforms, and worker
counts, and needs to hand independent substreams to each image and each
entity without any draw-order coupling. A counter-based design gives both:
the n-th value of a stream is a pure function of (key, n), and child
streams are derived from (key, index) alone. The full algorithm is written
out in docs/rng.md with frozen test vectors; this module is the reference
implementation.

Core mixing function (the SplitMix64 finalizer), all arithmetic mod 2^64::

    mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
              z ^= z >> 27; z *= 0x94D049BB133111EB
              z ^= z >> 31; return z

Stream values and derivation::

    key(seed)         = mix64(seed XOR GOLDEN)
    value(key, n)     = mix64(key + GOLDEN * n)        n = 1, 2, ...
    child(key, i)     = key((key XOR CHILD_SALT) + GOLDEN * (i + 1))

with GOLDEN = 0x9E3779B97F4A7C15 and CHILD_SALT = 0xD6E8FEB86659FD93.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
CHILD_SALT = 0xD6E8FEB86659FD93
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


class Stream:
    """One random stream; values are indexed by an internal counter."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    @classmethod
    def from_seed(cls, seed: int) -> "Stream":
        return cls(mix64((seed & MASK64) ^ GOLDEN))

    def value(self, counter: int) -> int:
        """Random-access draw: the counter-th u64 of this stream."""
        return mix64((self.key + GOLDEN * counter) & MASK64)

    def child(self, index: int) -> "Stream":
        """Independent substream; same (key, index) always gives the same child."""
        if index < 0:
            raise ValueError(f"child index must be >= 0, got {index}")
        base = ((self.key ^ CHILD_SALT) + GOLDEN * (index + 1)) & MASK64
        return Stream(mix64(base ^ GOLDEN))

    def next_u64(self) -> int:
        self.counter += 1
        return self.value(self.counter)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randint(self, n: int) -> int:
        """Integer in [0, n) by modulo; bias is negligible for small n."""
        if n <= 0:
            raise ValueError(f"randint requires n >= 1, got {n}")
        return self.next_u64() % n

    def poisson(self, mean: float) -> int:
        """Knuth's product method; draw count varies with the outcome."""
        if mean < 0:
            raise ValueError(f"poisson mean must be >= 0, got {mean}")
        if mean == 0:
            return 0
        limit = math.exp(-mean)
        count = 0
        product = self.random()
        while product > limit:
            count += 1
            product *= self.random()
        return count

    def kumaraswamy(self, a: float, b: float) -> float:
        """Bounded (0, 1) variate via inverse transform.

        CDF F(x) = 1 - (1 - x^a)^b, so x = (1 - (1-u)^(1/b))^(1/a).
        Two shape parameters cover the high/mid/low confidence profiles.
        """
        if a <= 0 or b <= 0:
            raise ValueError(f"shape parameters must be positive, got a={a} b={b}")
        u = self.random()
        return (1.0 - (1.0 - u) ** (1.0 / b)) ** (1.0 / a)


def stream(seed: int, *path: int) -> Stream:
    """Stream for a seed and a derivation path of child indices."""
    s = Stream.from_seed(seed)
    for index in path:
        s = s.child(index)
    return s
