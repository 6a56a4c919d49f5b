"""Sync patterns built from maximal-length shift-register sequences.

A pattern of length ``N`` is made of the maximally divergent input ``x_bar``
everywhere except on a sparse grid (every ``K``-th position, 1-based), where
an m-sequence decides between ``x_bar`` (bit 0) and the noise symbol (bit 1).
The spikes make every delayed copy of the pattern differ from the original in
many places, which is what lets a decoder lock onto the exact start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Channel, sync_threshold

# One primitive polynomial per degree, as the exponents of its non-leading,
# non-constant terms: 3 -> (1,) means x^3 + x + 1.
PRIMITIVE_POLYNOMIALS: dict[int, tuple[int, ...]] = {
    2: (1,),
    3: (1,),
    4: (1,),
    5: (2,),
    6: (1,),
    7: (1,),
    8: (4, 3, 2),
    9: (4,),
    10: (3,),
    11: (2,),
    12: (6, 4, 1),
    13: (4, 3, 1),
    14: (10, 6, 1),
    15: (1,),
    16: (12, 3, 1),
}
MIN_DEGREE, MAX_DEGREE = 2, 16


class UnsupportedDegree(ValueError):
    pass


class PatternTooShort(ValueError):
    pass


class DegenerateChannel(ValueError):
    pass


@dataclass(frozen=True)
class MSequence:
    bits: tuple[int, ...]
    m: int
    taps: int  # polynomial as a bit mask, bit i <-> coefficient of x^i

    @property
    def length(self) -> int:
        return len(self.bits)

    def polynomial(self) -> str:
        terms = [f"x^{i}" if i > 1 else ("x" if i == 1 else "1") for i in range(self.m, -1, -1) if self.taps >> i & 1]
        return " + ".join(terms)


def generate_msequence(m: int) -> MSequence:
    """One period of the binary m-sequence of degree ``m``.

    The register starts at all ones and follows the recurrence given by the
    characteristic polynomial x^m + ... + 1 from :data:`PRIMITIVE_POLYNOMIALS`:
    a[n+m] = a[n] xor a[n+i1] xor a[n+i2] ...
    """
    if not isinstance(m, (int, np.integer)) or not MIN_DEGREE <= m <= MAX_DEGREE:
        raise UnsupportedDegree(f"degree {m!r} outside [{MIN_DEGREE}, {MAX_DEGREE}]")
    m = int(m)
    middle = PRIMITIVE_POLYNOMIALS[m]
    taps = (1 << m) | 1
    for i in middle:
        taps |= 1 << i
    length = (1 << m) - 1
    a = [1] * m
    feedback = (0,) + middle
    for n in range(length - m):
        bit = 0
        for i in feedback:
            bit ^= a[n + i]
        a.append(bit)
    return MSequence(tuple(a[:length]), m, taps)


def circular_shift_distances(seq: MSequence) -> np.ndarray:
    """Hamming distance from the sequence to each of its circular shifts 0..l-1."""
    bits = np.array(seq.bits, dtype=np.int8)
    return np.array([int(np.count_nonzero(bits != np.roll(bits, k))) for k in range(len(bits))])


@dataclass(frozen=True)
class SyncPattern:
    symbols: tuple[int, ...]
    x_bar: int
    star: int
    K: int | None = None
    m: int | None = None

    @property
    def N(self) -> int:
        return len(self.symbols)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.symbols, dtype=np.intp)

    @property
    def n_stars(self) -> int:
        return sum(1 for s in self.symbols if s == self.star and s != self.x_bar)

    @property
    def l(self) -> int | None:
        return None if self.m is None else (1 << self.m) - 1

    def render(self) -> str:
        """'X' for x_bar, '.' for the noise symbol, '?' for anything else."""
        return "".join("X" if s == self.x_bar else "." if s == self.star else "?" for s in self.symbols)


def constant_pattern(N: int, x_bar: int, star: int) -> SyncPattern:
    return SyncPattern(tuple([x_bar] * N), x_bar, star)


def max_degree_for(slots: int) -> int | None:
    """Largest m in the supported range with 2^m - 1 <= slots."""
    if slots < 3:
        return None
    return min(MAX_DEGREE, int(math.floor(math.log2(slots + 1))))


def build_pattern(channel: Channel, N: int, K: int, *, allow_infinite: bool = False) -> SyncPattern:
    """Spike a run of ``x_bar`` with noise symbols on the grid K, 2K, ... .

    Grid slot j (1-based) carries the noise symbol when bit j of the m-sequence
    is 1; slots past the m-sequence period keep ``x_bar``. ``m`` is the largest
    degree whose period fits in floor(N/K).

    Channels with an infinite threshold are rejected unless ``allow_infinite``;
    the construction is still well defined for them but the problem is trivial.
    """
    if K < 2:
        raise ValueError(f"grid period K must be >= 2, got {K}")
    slots = N // K
    m = max_degree_for(slots)
    if m is None:
        raise PatternTooShort(f"N={N}, K={K}: floor(N/K)={slots} < 3; need N >= {3 * K}")
    value, x_bar, _ = sync_threshold(channel)
    if value == 0:
        raise DegenerateChannel("every input row equals the noise row; threshold is 0")
    if math.isinf(value) and not allow_infinite:
        raise DegenerateChannel("threshold is infinite; pass allow_infinite=True to build anyway")
    seq = generate_msequence(m)
    symbols = [x_bar] * N
    for j, bit in enumerate(seq.bits, start=1):
        if bit:
            symbols[j * K - 1] = channel.star
    return SyncPattern(tuple(symbols), x_bar, channel.star, K, m)


def shift_distances(pattern: SyncPattern) -> np.ndarray:
    """Entry i-1 is the Hamming distance between the pattern and its i-step delayed copy.

    The delayed copy is i noise symbols followed by s_1..s_{N-i}, for i = 1..N.
    """
    s = pattern.array
    N = len(s)
    out = np.empty(N, dtype=np.int64)
    for i in range(1, N + 1):
        shifted = np.concatenate([np.full(i, pattern.star), s[: N - i]])
        out[i - 1] = np.count_nonzero(shifted != s)
    return out


def min_shift_distance(pattern: SyncPattern) -> tuple[int, int]:
    """(minimum distance over all delays, smallest delay attaining it)."""
    d = shift_distances(pattern)
    i = int(np.argmin(d))
    return int(d[i]), i + 1
