"""Slow, obviously-correct reference computations used as test oracles.

Nothing here imports the vectorized paths it checks against.
"""

import math
from fractions import Fraction


def kl_direct(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a == 0:
            continue
        if b == 0:
            return math.inf
        total += a * math.log(a / b)
    return total


def circular_distances(bits):
    l = len(bits)
    return [sum(bits[i] != bits[(i - k) % l] for i in range(l)) for k in range(l)]


def shift_distances(symbols, star):
    N = len(symbols)
    out = []
    for i in range(1, N + 1):
        shifted = [star] * i + list(symbols[: N - i])
        out.append(sum(a != b for a, b in zip(shifted, symbols)))
    return out


def joint_counts(symbols, window, n_in, n_out):
    counts = [[0] * n_out for _ in range(n_in)]
    for x, y in zip(symbols, window):
        counts[x][y] += 1
    return counts


def typicality_stop(symbols, Q, mu, ys, horizon, slack=1e-12):
    """First n (1-based) whose window passes, or None. Q is a list of rows."""
    N = len(symbols)
    n_in, n_out = len(Q), len(Q[0])
    freq = [symbols.count(x) / N for x in range(n_in)]
    for n in range(N, min(horizon, len(ys)) + 1):
        c = joint_counts(symbols, ys[n - N : n], n_in, n_out)
        if all(
            abs(c[x][y] / N - freq[x] * Q[x][y]) <= mu + slack
            for x in range(n_in)
            for y in range(n_out)
        ):
            return n
    return None


def exact_posterior_argmax(symbols, Q, star, ys, A):
    """argmax_t P(nu = t | y_1..y_{A+N-1}) under a uniform prior, exact rationals.

    Smallest t on ties. Q entries are converted exactly from floats.
    """
    N = len(symbols)
    Qf = [[Fraction(v) for v in row] for row in Q]
    best_t, best = None, None
    for t in range(1, A + 1):
        like = Fraction(1)
        for i, y in enumerate(ys[: A + N - 1], start=1):
            x = symbols[i - t] if t <= i <= t + N - 1 else star
            like *= Qf[x][y]
        if best is None or like > best:
            best_t, best = t, like
    return best_t


def llr_direct(symbols, Q, star, window):
    return sum(math.log(Q[x][y] / Q[star][y]) for x, y in zip(symbols, window))
