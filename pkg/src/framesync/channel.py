"""Discrete memoryless channels with a designated noise symbol.

A channel is a row-stochastic matrix ``Q[x, y]`` over finite input and output
alphabets plus the index of the idle ("noise") input, written ``star`` below.
Divergences are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import yaml

ROW_SUM_TOL = 1e-12


class ChannelError(ValueError):
    """Base class for invalid channel descriptions."""


class RowSumError(ChannelError):
    pass


class NegativeEntry(ChannelError):
    pass


class UnreachableOutput(ChannelError):
    pass


class BadStarIndex(ChannelError):
    pass


class ChannelConfigError(ChannelError):
    """A channel file could not be parsed. ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True, eq=False)
class Channel:
    input_alphabet: tuple[str, ...]
    output_alphabet: tuple[str, ...]
    matrix: np.ndarray
    star: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "input_alphabet", tuple(str(a) for a in self.input_alphabet))
        object.__setattr__(self, "output_alphabet", tuple(str(a) for a in self.output_alphabet))

    @property
    def n_inputs(self) -> int:
        return len(self.input_alphabet)

    @property
    def n_outputs(self) -> int:
        return len(self.output_alphabet)

    @cached_property
    def sampling_thresholds(self) -> np.ndarray:
        return _sampling_thresholds(self.matrix)

    @property
    def star_row(self) -> np.ndarray:
        return self.matrix[self.star]

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return (
            self.input_alphabet == other.input_alphabet
            and self.output_alphabet == other.output_alphabet
            and self.star == other.star
            and np.array_equal(self.matrix, other.matrix)
        )

    def __hash__(self):
        return hash((self.input_alphabet, self.output_alphabet, self.star, self.matrix.tobytes()))

    def __repr__(self):
        return (
            f"Channel(inputs={list(self.input_alphabet)}, outputs={list(self.output_alphabet)}, "
            f"star={self.input_alphabet[self.star]!r}, matrix={self.matrix.tolist()})"
        )


def validate(channel: Channel) -> None:
    """Raise a :class:`ChannelError` subclass unless every channel invariant holds."""
    m = channel.matrix
    if m.ndim != 2 or m.shape != (channel.n_inputs, channel.n_outputs):
        raise ChannelError(
            f"matrix shape {m.shape} does not match alphabets "
            f"({channel.n_inputs} inputs, {channel.n_outputs} outputs)"
        )
    if not np.all(np.isfinite(m)):
        raise ChannelError("matrix has non-finite entries")
    if np.any(m < 0):
        x, y = np.argwhere(m < 0)[0]
        raise NegativeEntry(f"Q({channel.output_alphabet[y]}|{channel.input_alphabet[x]}) = {m[x, y]} < 0")
    sums = m.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        x = bad[0]
        raise RowSumError(f"row {channel.input_alphabet[x]!r} sums to {sums[x]!r}, not 1")
    unreachable = np.flatnonzero(~np.any(m > 0, axis=0))
    if unreachable.size:
        raise UnreachableOutput(
            f"output {channel.output_alphabet[unreachable[0]]!r} has zero probability under every input"
        )
    if not (isinstance(channel.star, (int, np.integer)) and 0 <= channel.star < channel.n_inputs):
        raise BadStarIndex(f"star index {channel.star!r} outside [0, {channel.n_inputs})")


def bsc(p: float) -> Channel:
    """Binary symmetric channel with crossover ``p`` and noise symbol ``"0"``."""
    return Channel(("0", "1"), ("0", "1"), np.array([[1 - p, p], [p, 1 - p]]), star=0)


def _sampling_thresholds(matrix: np.ndarray) -> np.ndarray:
    # Inverse-CDF thresholds: y = #{j < |Y|-1 : u >= cdf[x, j]}. Thresholds past the
    # last positive entry of a row are pushed to +inf so rounding in the cumulative
    # sum can never emit a zero-probability output.
    cdf = np.cumsum(matrix, axis=1)[:, :-1].copy()
    for x, row in enumerate(matrix):
        last = np.flatnonzero(row > 0)[-1]
        cdf[x, last:] = np.inf
    return cdf


def sample_outputs(channel: Channel, inputs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one output per entry of ``inputs``; consumes one uniform per symbol."""
    inputs = np.asarray(inputs, dtype=np.intp)
    thresholds = channel.sampling_thresholds
    u = rng.random(inputs.shape)
    out = np.zeros(inputs.shape, dtype=np.uint8 if channel.n_outputs <= 256 else np.int32)
    for j in range(thresholds.shape[1]):
        out += u >= thresholds[inputs, j]
    return out


def sample_outputs_constant(channel: Channel, x: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """As :func:`sample_outputs` for ``n`` copies of input ``x``, without the index array."""
    thresholds = channel.sampling_thresholds[x]
    u = rng.random(n)
    out = np.zeros(n, dtype=np.uint8 if channel.n_outputs <= 256 else np.int32)
    for t in thresholds:
        out += u >= t
    return out


def sample_output(channel: Channel, input_symbol: int, rng: np.random.Generator) -> int:
    return int(sample_outputs(channel, np.array([input_symbol]), rng)[0])


def kl_divergence(channel: Channel, x: int) -> float:
    """D(Q(.|x) || Q(.|star)) in nats; ``math.inf`` when the support is not contained."""
    p = channel.matrix[x]
    q = channel.star_row
    total = 0.0
    for py, qy in zip(p, q):
        if py == 0:
            continue
        if qy == 0:
            return math.inf
        total += py * math.log(py / qy)
    # Exact zero for the noise row itself; roundoff can otherwise leave ~1e-17.
    return max(float(total), 0.0) if x != channel.star else 0.0


class Threshold(NamedTuple):
    value: float
    x_bar: int
    divergences: tuple[float, ...]


def sync_threshold(channel: Channel) -> Threshold:
    """Largest divergence from the noise row and the first input attaining it."""
    divs = tuple(kl_divergence(channel, x) for x in range(channel.n_inputs))
    best = 0
    for x, d in enumerate(divs):
        if d > divs[best]:
            best = x
    return Threshold(divs[best], best, divs)


def bsc_threshold(p: float) -> float:
    """Closed form (1 - 2p) ln((1 - p)/p) for the binary symmetric channel."""
    return (1 - 2 * p) * math.log((1 - p) / p)


def _require(doc: dict, key: str):
    if key not in doc:
        raise ChannelConfigError(key, "missing required key")
    return doc[key]


def _symbol_list(doc: dict, key: str) -> tuple[str, ...]:
    value = _require(doc, key)
    if not isinstance(value, list) or not value:
        raise ChannelConfigError(key, "expected a non-empty list of symbol names")
    names = tuple(str(v) for v in value)
    if len(set(names)) != len(names):
        raise ChannelConfigError(key, "symbol names must be distinct")
    return names


def channel_from_dict(doc) -> Channel:
    if not isinstance(doc, dict):
        raise ChannelConfigError("<document>", "expected a mapping at top level")
    unknown = set(doc) - {"input_alphabet", "output_alphabet", "star", "matrix"}
    if unknown:
        raise ChannelConfigError(sorted(unknown)[0], "unknown key")
    inputs = _symbol_list(doc, "input_alphabet")
    outputs = _symbol_list(doc, "output_alphabet")
    star_name = str(_require(doc, "star"))
    if star_name not in inputs:
        raise ChannelConfigError("star", f"{star_name!r} is not in input_alphabet")
    rows = _require(doc, "matrix")
    if not isinstance(rows, list) or len(rows) != len(inputs):
        raise ChannelConfigError("matrix", f"expected {len(inputs)} rows, one per input symbol")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(outputs):
            raise ChannelConfigError("matrix", f"row {i} must list {len(outputs)} probabilities")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise ChannelConfigError("matrix", f"row {i} has non-numeric entries")
    channel = Channel(inputs, outputs, np.array(rows, dtype=np.float64), inputs.index(star_name))
    try:
        validate(channel)
    except ChannelError as exc:
        raise ChannelConfigError("matrix", str(exc)) from exc
    return channel


def load_channel(path: str | Path) -> Channel:
    """Read a channel file (YAML; JSON is accepted as a subset).

    Keys: ``input_alphabet``, ``output_alphabet`` (lists of strings), ``star``
    (a member of ``input_alphabet``) and ``matrix`` (row-major, one row per input).
    """
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ChannelConfigError("<document>", f"not valid YAML/JSON: {exc}") from exc
    return channel_from_dict(doc)


def channel_to_dict(channel: Channel) -> dict:
    return {
        "input_alphabet": list(channel.input_alphabet),
        "output_alphabet": list(channel.output_alphabet),
        "star": channel.input_alphabet[channel.star],
        "matrix": channel.matrix.tolist(),
    }


def dump_channel(channel: Channel, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(channel_to_dict(channel), sort_keys=False))


def from_rows(rows: Sequence[Sequence[float]], star: int = 0) -> Channel:
    """Channel with numeric symbol names, handy for tests and scripts."""
    m = np.asarray(rows, dtype=np.float64)
    return Channel(
        tuple(str(i) for i in range(m.shape[0])),
        tuple(str(j) for j in range(m.shape[1])),
        m,
        star,
    )
