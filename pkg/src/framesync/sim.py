"""Monte Carlo trials and sweeps for one-shot frame synchronization.

A trial draws the start time ``nu``, synthesizes noise / pattern / noise
outputs, and runs the requested decoders on the same outputs. A sweep repeats
this over a grid of (N, alpha) cells and aggregates error statistics.

Seeding
-------
Every trial owns a 64-bit seed derived from the master seed and the cell's
*content* (N and the IEEE-754 bits of alpha), never from its position in the
grid, so reordering a grid or changing the worker count leaves each record
unchanged::

    cell  = splitmix64(splitmix64(N) ^ bits(alpha))
    trial = splitmix64(splitmix64(master ^ cell) ^ trial_index)

The trial seed feeds a PCG64 generator that first draws ``nu`` and then one
uniform per output symbol, in time order.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .channel import Channel, sample_outputs, sample_outputs_constant
from .decoders import (
    DEFAULT_MU,
    DecoderId,
    Verdict,
    block_ml_decode,
    make_target,
    sliding_ml_decode,
    typicality_decode,
)
from .pattern import PatternTooShort, DegenerateChannel, SyncPattern, build_pattern

logger = logging.getLogger(__name__)

ML_CAP = 1 << 26
STREAM_CHUNK = 1 << 16
_MASK64 = (1 << 64) - 1

CSV_FIELDS = (
    "N",
    "alpha",
    "A",
    "decoder",
    "trials",
    "errors",
    "no_detections",
    "error_rate",
    "ci95_halfwidth",
    "wall_time_s",
    "seed",
)


class MLSkipped(RuntimeError):
    """An ML decoder was requested on a sequence longer than the materialization cap."""


class NuMode(str, enum.Enum):
    UNIFORM = "uniform"
    BLOCK_ALIGNED = "block"

    def __str__(self):
        return self.value


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _float_bits(v: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(v)))[0]


def cell_key(N: int, alpha: float) -> int:
    return splitmix64(splitmix64(N & _MASK64) ^ _float_bits(alpha))


def trial_seed(master: int, N: int, alpha: float, trial_index: int) -> int:
    return splitmix64(splitmix64((master & _MASK64) ^ cell_key(N, alpha)) ^ (trial_index & _MASK64))


def asynchronism_level(alpha: float, N: int) -> int:
    """A = max(1, round(e^(alpha N)))."""
    if alpha < 0:
        raise ValueError(f"asynchronism exponent must be >= 0, got {alpha}")
    exponent = alpha * N
    if exponent > 700:
        raise OverflowError(f"e^({exponent:g}) is not representable")
    return max(1, round(math.exp(exponent)))


@dataclass(frozen=True)
class TrialConfig:
    channel: Channel
    pattern: SyncPattern
    alpha: float
    mu: float = DEFAULT_MU
    seed: int = 0
    nu_mode: NuMode = NuMode.UNIFORM
    A: int | None = None  # derived from alpha when omitted

    def __post_init__(self):
        if self.A is None:
            object.__setattr__(self, "A", asynchronism_level(self.alpha, self.pattern.N))
        if self.A < 1:
            raise ValueError(f"A must be >= 1, got {self.A}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        object.__setattr__(self, "nu_mode", NuMode(self.nu_mode))

    @property
    def N(self) -> int:
        return self.pattern.N

    @property
    def horizon(self) -> int:
        return self.A + self.N - 1


@dataclass(frozen=True)
class TrialOutcome:
    nu: int
    verdicts: tuple[Verdict, ...]
    trial_seed: int

    def verdict(self, decoder: DecoderId | str) -> Verdict:
        decoder = DecoderId(decoder)
        for v in self.verdicts:
            if v.decoder is decoder:
                return v
        raise KeyError(decoder)

    def success(self, decoder: DecoderId | str) -> bool:
        return self.verdict(decoder).declared_start == self.nu

    def miss(self, decoder: DecoderId | str) -> str:
        """'ok', 'early', 'late' or 'none' (no detection)."""
        v = self.verdict(decoder)
        if v.declared_start is None:
            return "none"
        if v.declared_start == self.nu:
            return "ok"
        return "early" if v.declared_start < self.nu else "late"


def draw_nu(rng: np.random.Generator, A: int, N: int, mode: NuMode) -> int:
    if mode is NuMode.UNIFORM:
        return int(rng.integers(1, A + 1))
    n_blocks = (A - 1) // N + 1
    return 1 + N * int(rng.integers(0, n_blocks))


class OutputStream:
    """Lazily generated outputs y_1..y_horizon, yielded in fixed-size chunks.

    Iterating twice replays the same outputs; each iteration gets a private
    generator restored from the saved state.
    """

    def __init__(self, channel: Channel, pattern: SyncPattern, nu: int, horizon: int, rng_state: dict,
                 chunk: int = STREAM_CHUNK):
        self.channel = channel
        self.pattern = pattern
        self.nu = nu
        self.horizon = horizon
        self.rng_state = rng_state
        self.chunk = chunk

    def _rng(self) -> np.random.Generator:
        bg = np.random.PCG64()
        bg.state = self.rng_state
        return np.random.Generator(bg)

    def __iter__(self) -> Iterator[np.ndarray]:
        rng = self._rng()
        s = self.pattern.array
        N = len(s)
        lo_pat, hi_pat = self.nu, self.nu + N - 1
        star = self.channel.star
        for start in range(1, self.horizon + 1, self.chunk):
            stop = min(start + self.chunk - 1, self.horizon)
            n = stop - start + 1
            if stop < lo_pat or start > hi_pat:
                yield sample_outputs_constant(self.channel, star, n, rng)
                continue
            inputs = np.full(n, star, dtype=np.intp)
            a, b = max(start, lo_pat), min(stop, hi_pat)
            inputs[a - start : b - start + 1] = s[a - lo_pat : b - lo_pat + 1]
            yield sample_outputs(self.channel, inputs, rng)

    def materialize(self) -> np.ndarray:
        out = np.empty(self.horizon, dtype=np.uint8 if self.channel.n_outputs <= 256 else np.int32)
        pos = 0
        for c in self:
            out[pos : pos + c.size] = c
            pos += c.size
        return out


def _prepare(config: TrialConfig) -> tuple[int, OutputStream]:
    rng = np.random.Generator(np.random.PCG64(config.seed))
    nu = draw_nu(rng, config.A, config.N, config.nu_mode)
    stream = OutputStream(config.channel, config.pattern, nu, config.horizon, rng.bit_generator.state)
    return nu, stream


def _normalize_decoders(decoders: Iterable[DecoderId | str]) -> tuple[DecoderId, ...]:
    seen: list[DecoderId] = []
    for d in decoders:
        d = DecoderId(d)
        if d not in seen:
            seen.append(d)
    if not seen:
        raise ValueError("no decoders requested")
    return tuple(seen)


def run_trial(config: TrialConfig, decoders: Iterable[DecoderId | str], ml_cap: int = ML_CAP) -> TrialOutcome:
    """One asynchronous transmission, decoded by each requested decoder."""
    decoders = _normalize_decoders(decoders)
    if any(d.is_ml for d in decoders) and config.horizon > ml_cap:
        raise MLSkipped(f"A+N-1 = {config.horizon} exceeds the materialization cap {ml_cap}")
    nu, stream = _prepare(config)
    y = None
    verdicts = []
    for d in decoders:
        if d is DecoderId.TYPICALITY:
            target = make_target(config.pattern, config.channel, config.mu)
            v = typicality_decode(config.pattern, config.channel, target, stream, config.horizon)
        else:
            if y is None:
                y = stream.materialize()
            decode = sliding_ml_decode if d is DecoderId.SLIDING_ML else block_ml_decode
            v = decode(config.pattern, config.channel, y, config.A)
        verdicts.append(v)
    return TrialOutcome(nu, tuple(verdicts), config.seed)


@dataclass
class SweepRecord:
    N: int
    alpha: float
    A: int
    decoder: DecoderId
    trials: int
    errors: int
    no_detections: int
    error_rate: float
    ci95_halfwidth: float
    wall_time_s: float
    seed: int
    early: int = field(default=0, compare=False)
    late: int = field(default=0, compare=False)

    def row(self) -> dict:
        d = {k: getattr(self, k) for k in CSV_FIELDS}
        d["decoder"] = str(self.decoder)
        return d


def ci95_halfwidth(errors: int, trials: int) -> float:
    p = errors / trials
    return 1.96 * math.sqrt(p * (1 - p) / trials)


@dataclass(frozen=True)
class SkippedCell:
    N: int
    alpha: float
    decoders: tuple[DecoderId, ...]
    reason: str


def _tally(outcomes: Sequence[tuple[int, tuple[str, ...]]], decoders) -> dict:
    counts = {d: {"ok": 0, "early": 0, "late": 0, "none": 0} for d in decoders}
    for _, misses in outcomes:
        for d, m in zip(decoders, misses):
            counts[d][m] += 1
    return counts


def _run_batch(base: TrialConfig, master: int, indices: Sequence[int], decoders, ml_cap: int):
    out = []
    for i in indices:
        cfg = TrialConfig(base.channel, base.pattern, base.alpha, base.mu,
                          trial_seed(master, base.N, base.alpha, i), base.nu_mode, base.A)
        o = run_trial(cfg, decoders, ml_cap)
        out.append((i, tuple(o.miss(d) for d in decoders)))
    return out


def _split(n: int, parts: int) -> list[range]:
    step = max(1, math.ceil(n / parts))
    return [range(lo, min(n, lo + step)) for lo in range(0, n, step)]


def run_cell(base: TrialConfig, trials: int, master: int, decoders, *, workers: int = 1,
             ml_cap: int = ML_CAP, executor=None):
    """Tally per-decoder outcome kinds over ``trials`` independent trials."""
    if executor is None or workers <= 1:
        results = _run_batch(base, master, range(trials), decoders, ml_cap)
    else:
        futures = [executor.submit(_run_batch, base, master, r, decoders, ml_cap)
                   for r in _split(trials, workers * 4)]
        results = [x for f in futures for x in f.result()]
    results.sort(key=lambda t: t[0])
    return _tally(results, decoders)


def run_sweep(
    grid: Sequence[tuple[int, float]],
    channel: Channel,
    K: int,
    mu: float,
    trials: int,
    seed: int,
    decoders: Iterable[DecoderId | str],
    *,
    nu_mode: NuMode | str = NuMode.UNIFORM,
    workers: int = 1,
    ml_cap: int = ML_CAP,
    record_timing: bool = True,
    skipped: list | None = None,
) -> list[SweepRecord]:
    """One :class:`SweepRecord` per (cell, decoder), in grid order.

    Cells whose pattern cannot be built, and ML decoders on cells past the
    materialization cap, are logged and appended to ``skipped`` if given.
    With ``record_timing=False`` the wall time is reported as 0 so output files
    are byte-reproducible.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    decoders = _normalize_decoders(decoders)
    nu_mode = NuMode(nu_mode)
    records: list[SweepRecord] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for N, alpha in grid:
            N, alpha = int(N), float(alpha)
            try:
                pattern = build_pattern(channel, N, K, allow_infinite=True)
                A = asynchronism_level(alpha, N)
            except (PatternTooShort, DegenerateChannel, OverflowError) as exc:
                _skip(skipped, SkippedCell(N, alpha, decoders, str(exc)))
                continue
            active = decoders
            if A + N - 1 > ml_cap:
                ml = tuple(d for d in decoders if d.is_ml)
                if ml:
                    _skip(skipped, SkippedCell(N, alpha, ml, f"A+N-1={A + N - 1} exceeds ML cap {ml_cap}"))
                active = tuple(d for d in decoders if not d.is_ml)
                if not active:
                    continue
            base = TrialConfig(channel, pattern, alpha, mu, seed, nu_mode, A)
            t0 = time.perf_counter()
            tally = run_cell(base, trials, seed, active, workers=workers, ml_cap=ml_cap, executor=executor)
            wall = time.perf_counter() - t0 if record_timing else 0.0
            for d in active:
                c = tally[d]
                errors = trials - c["ok"]
                records.append(SweepRecord(
                    N, alpha, A, d, trials, errors, c["none"], errors / trials,
                    ci95_halfwidth(errors, trials), round(wall, 3), seed, c["early"], c["late"],
                ))
            logger.info("cell N=%d alpha=%g A=%d done in %.2fs", N, alpha, A, wall)
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def _skip(sink, cell: SkippedCell) -> None:
    logger.warning("skipping N=%d alpha=%g (%s): %s", cell.N, cell.alpha,
                   ",".join(map(str, cell.decoders)), cell.reason)
    if sink is not None:
        sink.append(cell)


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(records: Iterable[SweepRecord], path: str | Path) -> None:
    Path(path).write_text(records_to_csv(records))


def write_json(records: Iterable[SweepRecord], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.row() for r in records], indent=2) + "\n")


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
