import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_support.autoencoder import DecoderParams, decoder_forward, init_decoder
from sparse_support.core import SplitComplexVector
from sparse_support.metrics import (
    DEFAULT_GRID,
    calibrate_threshold,
    detect,
    error_rate,
    hard_threshold,
)


def test_hard_threshold_zero_gives_all_ones():
    assert hard_threshold([0.0, 0.3, 1.0], 0.0).tolist() == [1, 1, 1]


def test_hard_threshold_boundary_inclusive():
    assert hard_threshold([0.2, 0.8, 0.5], 0.5).tolist() == [0, 1, 1]


def test_hard_threshold_matches_loop(rng):
    s = rng.random((20, 7))
    for r in rng.random(10):
        out = hard_threshold(s, r)
        for i in range(20):
            for n in range(7):
                assert out[i, n] == (1 if s[i, n] >= r else 0)


def test_hard_threshold_rejects_bad_r():
    with pytest.raises(ValueError):
        hard_threshold([0.5], 1.5)


def test_error_rate_examples():
    a = np.array([[1, 0, 1, 0]])
    assert error_rate(a, a) == 0.0
    assert error_rate(np.array([[1, 1, 1, 0]]), a) == 0.25


def test_error_rate_hamming_oracle(rng):
    ahat = (rng.random((100, 13)) < 0.3).astype(int)
    a = (rng.random((100, 13)) < 0.3).astype(int)
    hamming = sum(int(np.sum(ahat[i] != a[i])) for i in range(100))
    assert error_rate(ahat, a) == hamming / (13 * 100)


def test_error_rate_rejects_non_binary():
    with pytest.raises(ValueError):
        error_rate(np.array([[0.5, 1]]), np.array([[0, 1]]))
    with pytest.raises(ValueError):
        error_rate(np.array([[0, 1]]), np.array([[0, 1, 1]]))


def test_calibration_separable():
    alpha = np.array([[1, 0, 0, 1, 0]] * 4)
    scores = np.where(alpha == 1, 0.9, 0.1)
    cal = calibrate_threshold(scores, alpha)
    assert cal.pe_star == 0.0
    assert cal.r_star == pytest.approx(0.11)


def test_calibration_all_negative_prefers_high_threshold(rng):
    scores = rng.random((200, 10))
    alpha = np.zeros((200, 10), dtype=int)
    cal = calibrate_threshold(scores, alpha)
    # grid oracle: false alarm rate at each r
    brute = [np.mean(scores >= r) for r in DEFAULT_GRID]
    assert cal.r_star == pytest.approx(DEFAULT_GRID[int(np.argmin(brute))])
    assert cal.r_star >= 0.98


def test_calibration_matches_brute_force(rng):
    alpha = (rng.random((300, 8)) < 0.2).astype(int)
    scores = np.clip(alpha * 0.4 + rng.random((300, 8)) * 0.6, 0, 1)
    scores[0, :3] = [0.25, 0.5, 0.99]  # exactly on grid points
    cal = calibrate_threshold(scores, alpha)
    brute = [error_rate(hard_threshold(scores, r), alpha) for r in DEFAULT_GRID]
    np.testing.assert_array_equal([pe for _, pe in cal.grid], brute)
    j = int(np.argmin(brute))
    assert cal.r_star == DEFAULT_GRID[j] and cal.pe_star == brute[j]
    assert cal.pe_star <= error_rate(hard_threshold(scores, 0.5), alpha)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), r1=st.floats(0, 1), r2=st.floats(0, 1))
def test_positive_count_monotone_in_threshold(seed, r1, r2):
    s = np.random.default_rng(seed).random(50)
    lo, hi = sorted((r1, r2))
    assert hard_threshold(s, hi).sum() <= hard_threshold(s, lo).sum()


def test_calibration_csv(tmp_path, rng):
    alpha = (rng.random((50, 5)) < 0.3).astype(int)
    cal = calibrate_threshold(rng.random((50, 5)), alpha)
    path = tmp_path / "cal.csv"
    cal.write_csv(path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 100
    assert rows[-1]["kind"] == "optimum"
    assert float(rows[-1]["r"]) == pytest.approx(cal.r_star)
    assert float(rows[-1]["P_E"]) == cal.pe_star


def test_detect_is_threshold_of_decoder(rng):
    W = init_decoder(6, 3, 10, rng)
    for _ in range(100):
        y = SplitComplexVector(rng.normal(size=3), rng.normal(size=3))
        r = rng.random()
        np.testing.assert_array_equal(detect(W, r, y), hard_threshold(decoder_forward(W, y)[0], r))


def test_detect_zero_weights_all_active():
    W = DecoderParams(np.zeros((4, 4)), np.zeros(4), np.zeros((4, 4)), np.zeros(4),
                      np.zeros((5, 4)), np.zeros(5))
    assert detect(W, 0.5, SplitComplexVector(np.ones(2), np.ones(2))).tolist() == [1] * 5
