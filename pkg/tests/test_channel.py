import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framesync.channel import (
    BadStarIndex,
    Channel,
    ChannelConfigError,
    NegativeEntry,
    RowSumError,
    UnreachableOutput,
    bsc,
    bsc_threshold,
    channel_from_dict,
    dump_channel,
    from_rows,
    kl_divergence,
    load_channel,
    sample_output,
    sample_outputs,
    sync_threshold,
    validate,
)

from oracles import kl_direct


def test_validate_bsc_ok():
    validate(bsc(0.1))


def test_validate_row_sum():
    with pytest.raises(RowSumError):
        validate(from_rows([[0.5, 0.6], [0.5, 0.5]]))


def test_validate_row_sum_tolerance():
    validate(from_rows([[0.5, 0.5 + 5e-13], [0.5, 0.5]]))
    with pytest.raises(RowSumError):
        validate(from_rows([[0.5, 0.5 + 5e-12], [0.5, 0.5]]))


def test_validate_negative():
    with pytest.raises(NegativeEntry):
        validate(from_rows([[1.2, -0.2], [0.5, 0.5]]))


def test_validate_unreachable_output():
    ch = Channel(("*",), ("y1", "y2"), np.array([[1.0, 0.0]]), 0)
    with pytest.raises(UnreachableOutput, match="y2"):
        validate(ch)


@pytest.mark.parametrize("star", [-1, 2, 1.0])
def test_validate_star_index(star):
    with pytest.raises(BadStarIndex):
        validate(Channel(("a", "b"), ("0", "1"), np.eye(2), star))


def test_deterministic_row_sampling():
    ch = from_rows([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    rng = np.random.default_rng(1)
    for x, y in [(0, 1), (1, 2), (2, 0)]:
        assert all(sample_output(ch, x, rng) == y for _ in range(50))


def test_bsc_sampling_frequency():
    # 3-sigma binomial interval around 0.9
    n = 10**6
    y = sample_outputs(bsc(0.1), np.ones(n, dtype=int), np.random.default_rng(12345))
    freq = y.mean()
    assert abs(freq - 0.9) <= 3 * math.sqrt(0.09 / n)


def test_sampling_reproducible():
    ch = from_rows([[0.2, 0.3, 0.5], [0.6, 0.4, 0.0]])
    inputs = np.random.default_rng(0).integers(0, 2, 1000)
    a = sample_outputs(ch, inputs, np.random.default_rng(99))
    b = sample_outputs(ch, inputs, np.random.default_rng(99))
    assert np.array_equal(a, b)


def test_sampling_never_emits_zero_probability_outputs():
    ch = from_rows([[0.3, 0.7, 0.0], [0.0, 0.0, 1.0], [0.1, 0.0, 0.9]])
    rng = np.random.default_rng(3)
    for x in range(3):
        y = sample_outputs(ch, np.full(100_000, x), rng)
        assert np.all(ch.matrix[x, y] > 0)


def test_kl_star_is_zero():
    assert kl_divergence(bsc(0.1), 0) == 0.0


def test_kl_bsc_direct_sum():
    expected = 0.9 * math.log(0.9 / 0.1) + 0.1 * math.log(0.1 / 0.9)
    assert kl_divergence(bsc(0.1), 1) == pytest.approx(expected, rel=1e-14)
    assert kl_divergence(bsc(0.1), 1) == pytest.approx(1.757779, abs=1e-6)


def test_kl_infinite():
    ch = from_rows([[0.0, 1.0], [1.0, 0.0]], star=0)
    assert kl_divergence(ch, 1) == math.inf


def test_threshold_all_rows_equal():
    ch = from_rows([[0.3, 0.7]] * 3, star=1)
    value, x_bar, _ = sync_threshold(ch)
    assert value == 0 and x_bar == 0


def test_threshold_bsc():
    value, x_bar, divs = sync_threshold(bsc(0.1))
    assert x_bar == 1
    assert value == pytest.approx(max(0.0, 1.7577796618689758), rel=1e-14)
    assert divs[0] == 0


def test_threshold_bsc04():
    direct = 0.6 * math.log(0.6 / 0.4) + 0.4 * math.log(0.4 / 0.6)
    assert sync_threshold(bsc(0.4)).value == pytest.approx(direct, abs=1e-15)
    assert sync_threshold(bsc(0.4)).value == pytest.approx(0.081093, abs=1e-6)


def test_threshold_tie_breaks_low_index():
    ch = from_rows([[0.5, 0.5], [0.9, 0.1], [0.1, 0.9]], star=0)
    assert sync_threshold(ch).x_bar == 1


@st.composite
def channels(draw):
    n_in = draw(st.integers(1, 4))
    n_out = draw(st.integers(1, 4))
    rows = []
    for _ in range(n_in):
        w = draw(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0]), min_size=n_out, max_size=n_out))
        if sum(w) == 0:
            w[0] = 1.0
        rows.append([v / sum(w) for v in w])
    m = np.array(rows)
    for y in range(n_out):
        if not np.any(m[:, y] > 0):
            x = y % n_in
            m[x, y] = 0.5
            m[x] /= m[x].sum()
    star = draw(st.integers(0, n_in - 1))
    return from_rows(m, star)


@settings(max_examples=200, deadline=None)
@given(channels())
def test_threshold_properties(ch):
    validate(ch)
    value, x_bar, divs = sync_threshold(ch)
    assert kl_divergence(ch, ch.star) == 0.0
    for x in range(ch.n_inputs):
        d = kl_divergence(ch, x)
        assert value >= d
        direct = kl_direct(ch.matrix[x], ch.star_row)
        assert d == direct or d == pytest.approx(direct, abs=1e-12)
    assert value == divs[x_bar]
    infinite = any(
        ch.matrix[x, y] > 0 and ch.star_row[y] == 0 for x in range(ch.n_inputs) for y in range(ch.n_outputs)
    )
    assert math.isinf(value) == infinite


@given(st.floats(1e-6, 0.5 - 1e-6))
def test_bsc_closed_form(p):
    assert sync_threshold(bsc(p)).value == pytest.approx(bsc_threshold(p), abs=1e-12)


def test_channel_file_roundtrip(tmp_path):
    ch = from_rows([[0.2, 0.3, 0.5], [0.6, 0.4, 0.0]], star=1)
    path = tmp_path / "ch.yaml"
    dump_channel(ch, path)
    assert load_channel(path) == ch


def test_channel_file_json(tmp_path):
    path = tmp_path / "bsc.json"
    path.write_text('{"input_alphabet": ["0", "1"], "output_alphabet": ["0", "1"], "star": "0",'
                    ' "matrix": [[0.9, 0.1], [0.1, 0.9]]}')
    assert load_channel(path) == bsc(0.1)


@pytest.mark.parametrize(
    "doc, key",
    [
        ({"output_alphabet": ["a"], "star": "x", "matrix": [[1]]}, "input_alphabet"),
        ({"input_alphabet": ["x"], "star": "x", "matrix": [[1]]}, "output_alphabet"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a"], "matrix": [[1]]}, "star"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a"], "star": "z", "matrix": [[1]]}, "star"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a"], "star": "x"}, "matrix"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a", "b"], "star": "x", "matrix": [[1]]}, "matrix"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a", "b"], "star": "x", "matrix": [[0.5, 0.6]]}, "matrix"),
        ({"input_alphabet": ["x"], "output_alphabet": ["a"], "star": "x", "matrix": [[1]], "extra": 1}, "extra"),
        ({"input_alphabet": "x", "output_alphabet": ["a"], "star": "x", "matrix": [[1]]}, "input_alphabet"),
    ],
)
def test_channel_file_errors_name_key(doc, key):
    with pytest.raises(ChannelConfigError) as info:
        channel_from_dict(doc)
    assert info.value.key == key
    assert key in str(info.value)
