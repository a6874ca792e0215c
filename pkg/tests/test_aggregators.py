import random

import pytest

from dialog_quality.aggregators import (
    binarize_score,
    last_turn_tld,
    mean_tld,
    rising_linear_tld,
    union_tld,
)

FATAL = [0.05, 0.75, 0.01]
REPHRASE = [0.99, 0.99, 0.02]
REFINEMENT = [0.90, 0.20]


def test_mean_fatal_dialog():
    assert mean_tld(FATAL) == pytest.approx(0.27)


def test_mean_rephrase_dialog():
    assert mean_tld(REPHRASE) == pytest.approx(2 / 3)


def test_mean_single_turn_identity():
    for s in (0.0, 0.31, 1.0):
        assert mean_tld([s]) == s


def test_last_turn_values():
    assert last_turn_tld(FATAL) == pytest.approx(0.01)
    assert last_turn_tld(REFINEMENT) == pytest.approx(0.20)
    assert last_turn_tld([0.42]) == 0.42


def test_union_values():
    assert union_tld(FATAL) == pytest.approx(0.27)
    assert union_tld(REFINEMENT) == pytest.approx(0.55)
    assert union_tld([0.0, 0.0, 0.0]) == 0.0


def test_rising_linear_values():
    # hand-derived: sum(i * s_i) / sum(i), 1-based
    assert rising_linear_tld(FATAL) == pytest.approx(1.58 / 6)
    assert rising_linear_tld(REFINEMENT) == pytest.approx(1.30 / 3)
    assert rising_linear_tld([0.7]) == pytest.approx(0.7)


def test_empty_input_rejected():
    for fn in (mean_tld, last_turn_tld, union_tld, rising_linear_tld):
        with pytest.raises(ValueError):
            fn([])


def test_out_of_range_scores_rejected():
    with pytest.raises(ValueError):
        mean_tld([0.5, 1.2])


def test_binarize_boundary_inclusive():
    assert binarize_score(0.5) is True
    assert binarize_score(0.49) is False
    assert binarize_score(0.66) is True


def test_binarize_threshold_domain():
    with pytest.raises(ValueError):
        binarize_score(0.5, threshold=0.0)
    with pytest.raises(ValueError):
        binarize_score(1.5)


def _random_scores(rng, n=None):
    n = n or rng.randint(1, 8)
    return [rng.random() for _ in range(n)]


def test_constant_input_returns_constant():
    rng = random.Random(2)
    for _ in range(100):
        s = rng.random()
        scores = [s] * rng.randint(1, 6)
        for fn in (mean_tld, last_turn_tld, union_tld, rising_linear_tld):
            assert fn(scores) == pytest.approx(s)


def test_outputs_stay_in_unit_interval():
    rng = random.Random(3)
    for _ in range(300):
        scores = _random_scores(rng)
        for fn in (mean_tld, last_turn_tld, union_tld, rising_linear_tld):
            assert 0.0 <= fn(scores) <= 1.0


def test_monotone_in_each_turn_score():
    rng = random.Random(4)
    for _ in range(200):
        scores = _random_scores(rng)
        i = rng.randrange(len(scores))
        bumped = list(scores)
        bumped[i] = min(1.0, bumped[i] + rng.random() * (1 - bumped[i]))
        for fn in (mean_tld, last_turn_tld, union_tld, rising_linear_tld):
            assert fn(bumped) >= fn(scores) - 1e-12


def test_union_dominates_components():
    rng = random.Random(5)
    for _ in range(200):
        scores = _random_scores(rng)
        u = union_tld(scores)
        assert u >= mean_tld(scores) - 1e-12
        assert u >= last_turn_tld(scores) - 1e-12


def test_rising_linear_vs_mean():
    rng = random.Random(6)
    for _ in range(100):
        s = rng.random()
        n = rng.randint(1, 6)
        assert rising_linear_tld([s] * n) == pytest.approx(mean_tld([s] * n))
    for n in range(2, 8):
        tail_spike = [0.0] * (n - 1) + [1.0]
        assert rising_linear_tld(tail_spike) > mean_tld(tail_spike)


def test_binarized_union_equals_either_or():
    # brute force: thresholding max(mean, last) == (mean >= t) or (last >= t)
    rng = random.Random(7)
    for _ in range(500):
        scores = _random_scores(rng)
        t = rng.uniform(0.05, 0.95)
        either = binarize_score(mean_tld(scores), t) or binarize_score(
            last_turn_tld(scores), t
        )
        assert binarize_score(union_tld(scores), t) == either
