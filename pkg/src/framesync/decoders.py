"""Decoders that locate a sync pattern in a channel output sequence.

Three rules are provided:

* :func:`typicality_decode` -- sequential. At each time ``n >= N`` it forms the
  joint type of the pattern against the last ``N`` outputs and stops as soon as
  every entry is within ``mu`` of the target joint distribution.
* :func:`sliding_ml_decode` -- sees the whole sequence ``y_1..y_{A+N-1}`` and
  picks the start maximizing the log-likelihood ratio of pattern vs. noise.
* :func:`block_ml_decode` -- the same ratio, restricted to disjoint blocks of
  length ``N`` (the genie-aided receiver that knows the pattern is block aligned).

Time indices are 1-based throughout, matching ``y_1, y_2, ...``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .channel import Channel
from .pattern import SyncPattern

TYPICALITY_SLACK = 1e-12
DEFAULT_MU = 0.05
# Windows scored per vectorized batch by the ML decoders.
_ML_BATCH = 1 << 15
_TYP_BATCH = 1 << 16


class StreamExhausted(RuntimeError):
    """The output stream ended before the horizon and before any stop."""


class DecoderId(str, enum.Enum):
    TYPICALITY = "typicality"
    SLIDING_ML = "sliding_ml"
    BLOCK_ML = "block_ml"

    def __str__(self):
        return self.value

    @property
    def is_ml(self) -> bool:
        return self is not DecoderId.TYPICALITY


@dataclass(frozen=True)
class Verdict:
    decoder: DecoderId
    declared_start: int | None
    stop_time: int | None

    @property
    def detected(self) -> bool:
        return self.declared_start is not None

    @classmethod
    def stop(cls, decoder: DecoderId, stop_time: int, N: int) -> "Verdict":
        return cls(decoder, stop_time - N + 1, stop_time)

    @classmethod
    def no_detection(cls, decoder: DecoderId) -> "Verdict":
        return cls(decoder, None, None)


@dataclass(frozen=True, eq=False)
class JointType:
    """Co-occurrence counts of (pattern symbol, output symbol) over one window.

    ``window`` holds the outputs y_{end-N+1} .. y_end; ``end`` is optional
    bookkeeping for the sliding update.
    """

    counts: np.ndarray
    window: tuple[int, ...]
    end: int | None = None

    @property
    def N(self) -> int:
        return len(self.window)

    def __eq__(self, other):
        if not isinstance(other, JointType):
            return NotImplemented
        return np.array_equal(self.counts, other.counts) and self.window == other.window and self.end == other.end


def joint_type(pattern: SyncPattern, n_inputs: int, n_outputs: int, window, end: int | None = None) -> JointType:
    s = pattern.array
    w = np.asarray(window, dtype=np.intp)
    if w.shape != s.shape:
        raise ValueError(f"window length {w.size} != pattern length {s.size}")
    counts = np.bincount(s * n_outputs + w, minlength=n_inputs * n_outputs).reshape(n_inputs, n_outputs)
    return JointType(counts.astype(np.int64), tuple(int(v) for v in w), end)


def update_type(
    jt: JointType,
    pattern: SyncPattern,
    leaving: tuple[int, int],
    entering: tuple[int, int],
) -> JointType:
    """Slide the window one step: drop ``leaving`` and append ``entering``.

    Both arguments are ``(time, output)`` pairs. Every pattern position realigns
    with its neighbour's output, so the counts change wherever consecutive
    window outputs differ; only those positions are touched.
    """
    (t_out, y_out), (t_in, y_in) = leaving, entering
    if jt.window[0] != y_out:
        raise ValueError(f"leaving output {y_out} does not match window head {jt.window[0]}")
    if jt.end is not None and (t_in != jt.end + 1 or t_out != jt.end - jt.N + 1):
        raise ValueError(f"positions ({t_out}, {t_in}) do not slide a window ending at {jt.end}")
    old = np.asarray(jt.window, dtype=np.intp)
    new = np.append(old[1:], y_in)
    s = pattern.array
    changed = np.flatnonzero(old != new)
    counts = jt.counts.copy()
    np.subtract.at(counts, (s[changed], old[changed]), 1)
    np.add.at(counts, (s[changed], new[changed]), 1)
    end = None if jt.end is None else jt.end + 1
    return JointType(counts, tuple(int(v) for v in new), end)


def batch_joint_counts(pattern_arr: np.ndarray, n_inputs: int, n_outputs: int, windows: np.ndarray) -> np.ndarray:
    """Joint counts for every row of ``windows`` (shape W x N) -> W x |X| x |Y| int64."""
    W = windows.shape[0]
    counts = np.zeros((W, n_inputs, n_outputs), dtype=np.int64)
    for x in np.unique(pattern_arr):
        cols = np.flatnonzero(pattern_arr == x)
        sub = windows[:, cols]
        remaining = np.full(W, cols.size, dtype=np.int64)
        for y in range(n_outputs - 1):
            c = np.count_nonzero(sub == y, axis=1)
            counts[:, x, y] = c
            remaining -= c
        counts[:, x, n_outputs - 1] = remaining
    return counts


@dataclass(frozen=True, eq=False)
class TypicalityTarget:
    target: np.ndarray
    mu: float

    def accepts(self, counts: np.ndarray, N: int) -> np.ndarray:
        """Boolean per leading index of ``counts`` (..., |X|, |Y|)."""
        dev = np.abs(counts / N - self.target)
        return np.all(dev <= self.mu + TYPICALITY_SLACK, axis=(-2, -1))


def make_target(pattern: SyncPattern, channel: Channel, mu: float = DEFAULT_MU) -> TypicalityTarget:
    """P(x, y) = (fraction of x in the pattern) * Q(y|x)."""
    if not mu >= 0:
        raise ValueError(f"typicality tolerance must be >= 0, got {mu}")
    freq = np.bincount(pattern.array, minlength=channel.n_inputs) / pattern.N
    return TypicalityTarget(freq[:, None] * channel.matrix, float(mu))


def _chunks(stream) -> Iterable[np.ndarray]:
    for item in [stream] if isinstance(stream, np.ndarray) else stream:
        a = np.atleast_1d(np.asarray(item)).ravel()
        # Bounded batches keep the window matrix small for long materialized inputs.
        for lo in range(0, a.size, _TYP_BATCH):
            yield a[lo : lo + _TYP_BATCH]


def typicality_decode(
    pattern: SyncPattern,
    channel: Channel,
    target: TypicalityTarget,
    stream,
    horizon: int,
) -> Verdict:
    """Sequential joint-typicality stopping rule.

    ``stream`` is an array or an iterable of output symbols or of 1-D chunks of
    output symbols. The stop decision at time n uses y_1..y_n only; anything the
    stream yields past the horizon is ignored. Returns a no-detection verdict
    when nothing passes by ``horizon``; raises :class:`StreamExhausted` when the
    stream ends first.
    """
    N = pattern.N
    s = pattern.array
    tail = np.empty(0, dtype=np.intp)
    pos = 0
    if horizon < N:
        return Verdict.no_detection(DecoderId.TYPICALITY)
    for chunk in _chunks(stream):
        chunk = chunk[: horizon - pos].astype(np.intp, copy=False)
        if chunk.size == 0:
            continue
        buf = np.concatenate([tail, chunk])
        if buf.size >= N:
            windows = sliding_window_view(buf, N)
            counts = batch_joint_counts(s, channel.n_inputs, channel.n_outputs, windows)
            hits = np.flatnonzero(target.accepts(counts, N))
            if hits.size:
                first_time = pos - tail.size + 1  # time index of buf[0]
                return Verdict.stop(DecoderId.TYPICALITY, first_time + int(hits[0]) + N - 1, N)
        pos += chunk.size
        tail = buf[max(0, buf.size - (N - 1)):] if N > 1 else buf[:0]
        if pos >= horizon:
            return Verdict.no_detection(DecoderId.TYPICALITY)
    raise StreamExhausted(f"stream ended at y_{pos}, before horizon {horizon}")


@dataclass(frozen=True, eq=False)
class _LikelihoodTable:
    """Per-symbol scores for the pattern-vs-noise likelihood ratio.

    ``weight[x, y]`` is ln Q(y|x) - ln Q(y|star) where both are positive and
    ln Q(y|x) where only Q(y|star) vanishes. Outputs with Q(y|x) = 0 make a
    window impossible (``forbidden``); outputs with Q(y|star) = 0 make every
    window that misses them impossible, so covering them ranks first.
    """

    weight: np.ndarray
    forbidden: np.ndarray
    star_zero: np.ndarray

    @classmethod
    def build(cls, channel: Channel) -> "_LikelihoodTable":
        Q = channel.matrix
        q_star = channel.star_row
        weight = np.zeros_like(Q)
        with np.errstate(divide="ignore", invalid="ignore"):
            logQ = np.log(Q)
            log_star = np.log(q_star)
            ratio = logQ - log_star[None, :]
        both = (Q > 0) & (q_star > 0)[None, :]
        weight[both] = ratio[both]
        only_x = (Q > 0) & (q_star == 0)[None, :]
        weight[only_x] = logQ[only_x]
        return cls(weight, Q == 0, q_star == 0)

    @property
    def has_zeros(self) -> bool:
        return bool(self.forbidden.any())


def _score_windows(pattern_arr, channel, table: _LikelihoodTable, windows):
    """(impossible count, star-zero outputs covered, finite log ratio) per window."""
    counts = batch_joint_counts(pattern_arr, channel.n_inputs, channel.n_outputs, windows)
    score = np.zeros(windows.shape[0])
    # Fixed summation order over (x, y) so equal counts give bit-equal scores.
    for x in np.unique(pattern_arr):
        for y in range(channel.n_outputs):
            w = table.weight[x, y]
            if w != 0.0:
                score += counts[:, x, y] * w
    if table.has_zeros:
        impossible = (counts * table.forbidden).sum(axis=(1, 2))
        covered = counts[:, :, table.star_zero].sum(axis=(1, 2))
    else:
        impossible = covered = np.zeros(windows.shape[0], dtype=np.int64)
    return impossible, covered, score


def _best_window(impossible, covered, score) -> tuple[tuple, int]:
    """Lexicographic argmax of (possible, covered, score); smallest index on ties."""
    ok = impossible == 0
    cand = ok if ok.any() else np.ones_like(ok)
    c_best = covered[cand].max()
    cand = cand & (covered == c_best)
    s_best = score[cand].max()
    idx = int(np.flatnonzero(cand & (score == s_best))[0])
    return (bool(ok.any()), int(c_best), float(s_best)), idx


def _ml_over(pattern: SyncPattern, channel: Channel, windows: np.ndarray) -> int:
    """0-based index of the winning row of ``windows``."""
    table = _LikelihoodTable.build(channel)
    s = pattern.array
    best_key, best_idx = None, 0
    for lo in range(0, windows.shape[0], _ML_BATCH):
        key, idx = _best_window(*_score_windows(s, channel, table, windows[lo : lo + _ML_BATCH]))
        if best_key is None or key > best_key:
            best_key, best_idx = key, lo + idx
    return best_idx


def _check_sequence(full_sequence, A: int, N: int) -> np.ndarray:
    y = np.asarray(full_sequence)
    if A < 1:
        raise ValueError(f"asynchronism level must be >= 1, got {A}")
    if y.ndim != 1 or y.size < A + N - 1:
        raise ValueError(f"need y_1..y_{A + N - 1}, got {y.size} outputs")
    return y[: A + N - 1]


def sliding_ml_decode(pattern: SyncPattern, channel: Channel, full_sequence, A: int) -> Verdict:
    """Start time in [1, A] maximizing sum_k ln(Q(y_{t+k-1}|s_k) / Q(y_{t+k-1}|star)).

    Ties go to the smallest start. Outputs that the noise symbol cannot produce
    are handled lexicographically: impossible windows lose, and windows that
    cover more such outputs win before the finite part of the score is compared.
    """
    N = pattern.N
    y = _check_sequence(full_sequence, A, N)
    windows = sliding_window_view(y, N)[:A]
    t = _ml_over(pattern, channel, windows) + 1
    return Verdict.stop(DecoderId.SLIDING_ML, t + N - 1, N)


def block_ml_decode(pattern: SyncPattern, channel: Channel, full_sequence, A: int) -> Verdict:
    """As :func:`sliding_ml_decode`, over the r = floor((A+N-1)/N) disjoint blocks only."""
    N = pattern.N
    y = _check_sequence(full_sequence, A, N)
    r = (A + N - 1) // N
    blocks = y[: r * N].reshape(r, N)
    i = _ml_over(pattern, channel, blocks)
    return Verdict.stop(DecoderId.BLOCK_ML, i * N + N, N)


def block_starts(A: int, N: int) -> np.ndarray:
    """t_i = (i-1)N + 1 for i = 1..r."""
    r = (A + N - 1) // N
    return np.arange(r) * N + 1


def log_likelihood_ratios(pattern: SyncPattern, channel: Channel, full_sequence, A: int) -> np.ndarray:
    """L(t) for t = 1..A; +/-inf where the finite-score convention does not apply."""
    N = pattern.N
    y = _check_sequence(full_sequence, A, N).astype(np.intp)
    table = _LikelihoodTable.build(channel)
    windows = sliding_window_view(y, N)[:A]
    impossible, covered, score = _score_windows(pattern.array, channel, table, windows)
    out = score.astype(np.float64)
    out[covered > 0] = math.inf
    out[impossible > 0] = -math.inf
    return out
