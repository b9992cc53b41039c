import numpy as np
import pytest

from incomefair.usermodel import ExaminationModel, examination_prob, simulate_session


def test_examination_prob():
    assert examination_prob(1, 5) == 1.0
    assert examination_prob(3, 5) == 0.5
    assert examination_prob(6, 5) == 0.0
    with pytest.raises(ValueError):
        examination_prob(0, 5)


def test_probs_non_increasing_and_cut():
    p = ExaminationModel(k_c=5).probs(8)
    assert np.all(np.diff(p) <= 0)
    assert np.all(p[:5] > 0) and np.all(p[5:] == 0)
    assert p[2] == examination_prob(3, 5)


def test_certain_and_impossible_clicks():
    rng = np.random.default_rng(0)
    exam = ExaminationModel(5)
    rel = np.array([1.0, 0.0, 0.0])
    for _ in range(200):
        c = simulate_session(np.array([0, 1, 2]), rel, exam, rng)
        assert c[0] and not c[1:].any()


def test_no_clicks_beyond_cutoff():
    rng = np.random.default_rng(1)
    clicks = simulate_session(np.tile(np.arange(8), (5000, 1)), np.ones(8), ExaminationModel(5), rng)
    assert not clicks[:, 5:].any()


def test_click_rate_at_rank_three():
    # p_3 R = 0.5 * 0.5; 3-sigma binomial band is ~0.004, the stated band 0.01.
    rng = np.random.default_rng(2024)
    n = 100_000
    rel = np.array([0.0, 0.0, 0.5])
    clicks = simulate_session(np.tile([0, 1, 2], (n, 1)), rel, ExaminationModel(5), rng)
    rate = clicks[:, 2].mean()
    assert abs(rate - 0.25) < 0.01
    assert abs(rate - 0.25) < 3 * np.sqrt(0.25 * 0.75 / n)


def test_reproducible_clicks():
    rel = np.linspace(0.1, 1, 6)
    a = simulate_session(np.array([5, 4, 3, 2, 1]), rel, ExaminationModel(5), np.random.default_rng(9))
    b = simulate_session(np.array([5, 4, 3, 2, 1]), rel, ExaminationModel(5), np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)
