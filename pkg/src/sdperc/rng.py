"""Counter-based random keys.

Every uniform used by the library is a pure function of
``(seed, stream, replicate, site)`` computed with a SplitMix64 mixer. There is
no sequential generator state, so a draw does not depend on how many other
draws happened before it, on the window it was requested through, or on the
number of worker threads. Fields sampled with the same key at different
densities are coupled through the same per-site uniforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finaliser on Python ints (matches the compiled version)."""
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stable_hash(*parts: int) -> int:
    """Order-sensitive 64-bit hash of a tuple of integers."""
    h = mix64(len(parts))
    for part in parts:
        h = mix64(h ^ (part & _MASK))
    return h


class Stream(IntEnum):
    X = 1  # initial configuration
    Y = 2  # enhancement
    CLOCK = 3
    FIELD = 4  # plain Bernoulli fields not tied to an sdp draw


@dataclass(frozen=True)
class RngKey:
    seed: int
    replicate: int = 0
    stream: int = Stream.FIELD

    def __post_init__(self) -> None:
        if not 0 <= self.seed <= _MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_stream(self, stream: int) -> "RngKey":
        return RngKey(self.seed, self.replicate, int(stream))

    def replica(self, index: int) -> "RngKey":
        return RngKey(self.seed, index, self.stream)

    @property
    def base(self) -> int:
        """64-bit base from which per-site hashes are derived."""
        return stable_hash(self.seed, int(self.stream), self.replicate)
