from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Tuple

from rasim.errors import ConfigError


class Access(Enum):
    READ = "read"
    WRITE = "write"


class Outcome(Enum):
    HIT = "hit"
    MISS = "miss"


def parse_hit_rate(value: str | Fraction) -> Tuple[int, int]:
    """Parse ``"p/q"`` into ``(p, q)``. The denominator is kept as written, it sets the phase period."""
    if isinstance(value, Fraction):
        p, q = value.numerator, value.denominator
    else:
        try:
            p_str, q_str = str(value).split("/")
            p, q = int(p_str), int(q_str)
        except ValueError:
            raise ConfigError(f"hit_rate must look like 'p/q', got {value!r}")
    if q < 1 or p < 0 or p > q:
        raise ConfigError(f"hit_rate {value!r} must satisfy 0 <= p <= q, q >= 1")
    return p, q


@dataclass
class CacheModel:
    """Private L1 cache with a deterministic hit-ratio scheme.

    With hit rate ``p/q`` the cache cycles through a phase counter modulo
    ``q``; accesses at phase < p hit and the others miss. Reads and writes
    share one counter stream. There is no address state: traces carry no
    addresses.
    """

    p: int
    q: int
    size_bits: int = 32 * 1024 * 8
    line_bits: int = 1024
    access_count: int = 0
    hit_count: int = 0
    phase: int = 0

    @classmethod
    def from_hit_rate(cls, hit_rate: str | Fraction, size_bits: int = 32 * 1024 * 8, line_bits: int = 1024):
        p, q = parse_hit_rate(hit_rate)
        return cls(p=p, q=q, size_bits=size_bits, line_bits=line_bits)

    def set_hit_rate(self, hit_rate: str | Fraction):
        """Switch to the hit rate of the application now running. The phase restarts when the rate changes."""
        p, q = parse_hit_rate(hit_rate)
        if (p, q) != (self.p, self.q):
            self.p, self.q, self.phase = p, q, 0

    @property
    def miss_count(self) -> int:
        return self.access_count - self.hit_count

    @property
    def n_lines(self) -> int:
        return self.size_bits // self.line_bits

    def access(self, kind: Access = Access.READ) -> Outcome:
        hit = self.phase < self.p
        self.phase = (self.phase + 1) % self.q
        self.access_count += 1
        if hit:
            self.hit_count += 1
            return Outcome.HIT
        return Outcome.MISS


def cache_access(cache: CacheModel, kind: Access = Access.READ) -> Outcome:
    return cache.access(kind)
