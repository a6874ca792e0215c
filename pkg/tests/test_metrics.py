import math
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.stats

from dialog_quality.metrics import (
    LengthBucket,
    MetricError,
    agreement_within_one,
    attribute_correlations,
    classification_report,
    roc_auc,
    spearman_rho,
    stratified_auc,
)


# ---------------------------------------------------------------------------
# independent oracles

def brute_force_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(pos) * len(neg))


def trapezoid_auc(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    points = [(0.0, 0.0)]
    for threshold in np.unique(s)[::-1]:
        predicted = s >= threshold
        points.append(
            (
                int((predicted & ~y).sum()) / n_neg,
                int((predicted & y).sum()) / n_pos,
            )
        )
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def brute_force_ranks(values):
    v = np.asarray(values, dtype=float)
    less = (v[None, :] < v[:, None]).sum(axis=1)
    equal = (v[None, :] == v[:, None]).sum(axis=1)
    return less + (equal + 1) / 2.0


def brute_force_spearman(x, y):
    rx = brute_force_ranks(x)
    ry = brute_force_ranks(y)
    mx = math.fsum(rx) / len(rx)
    my = math.fsum(ry) / len(ry)
    num = math.fsum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(
        math.fsum((a - mx) ** 2 for a in rx) * math.fsum((b - my) ** 2 for b in ry)
    )
    return num / den


# ---------------------------------------------------------------------------
# classification_report

def test_report_perfect():
    r = classification_report([True, False, True], [True, False, True])
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_report_hand_counted():
    # tp=2, fp=1, fn=1, tn=1
    predicted = [True, True, True, False, False]
    actual = [True, True, False, True, False]
    r = classification_report(predicted, actual)
    assert (r.tp, r.fp, r.fn, r.tn) == (2, 1, 1, 1)
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == pytest.approx(2 / 3)
    assert r.f1 == pytest.approx(2 / 3)


def test_report_all_negative_convention():
    r = classification_report([False, False], [True, False])
    assert r.precision == 0.0 and not r.precision_defined
    assert r.recall == 0.0 and r.recall_defined
    assert r.f1 == 0.0


def test_report_counts_sum_to_n():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 50))
        predicted = list(rng.random(n) < 0.5)
        actual = list(rng.random(n) < 0.5)
        r = classification_report(predicted, actual)
        assert r.tp + r.fp + r.tn + r.fn == n


def test_report_length_mismatch():
    with pytest.raises(MetricError, match="mismatch"):
        classification_report([True], [True, False])


# ---------------------------------------------------------------------------
# roc_auc

def test_auc_perfectly_separated():
    assert roc_auc([0.9, 0.8, 0.1, 0.2], [True, True, False, False]) == 1.0


def test_auc_all_ties():
    assert roc_auc([0.5, 0.5, 0.5, 0.5], [True, False, True, False]) == 0.5


def test_auc_enumerated_pairs():
    assert roc_auc([0.9, 0.4, 0.6], [True, False, True]) == 1.0


def test_auc_single_class_rejected():
    with pytest.raises(MetricError, match="both classes"):
        roc_auc([0.1, 0.9], [True, True])


def test_auc_matches_bruteforce_and_trapezoid():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(2, 80))
        scores = list(np.round(rng.random(n), 2))  # rounding forces ties
        labels = list(rng.random(n) < 0.5)
        if all(labels) or not any(labels):
            labels[0] = not labels[0]
        got = roc_auc(scores, labels)
        assert got == pytest.approx(brute_force_auc(scores, labels), abs=1e-12)
        assert got == pytest.approx(trapezoid_auc(scores, labels), abs=1e-12)


def test_auc_negation_symmetry_without_ties():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(4, 60))
        scores = list(rng.permutation(n).astype(float))
        labels = list(rng.random(n) < 0.5)
        if all(labels) or not any(labels):
            labels[0] = not labels[0]
        a = roc_auc(scores, labels)
        b = roc_auc([-s for s in scores], labels)
        assert a + b == pytest.approx(1.0, abs=1e-12)


def test_auc_invariant_under_monotone_transform():
    rng = np.random.default_rng(4)
    for _ in range(40):
        n = int(rng.integers(3, 50))
        scores = list(rng.random(n))
        labels = list(rng.random(n) < 0.5)
        if all(labels) or not any(labels):
            labels[0] = not labels[0]
        transformed = [math.exp(3 * s) + 1 for s in scores]
        assert roc_auc(scores, labels) == pytest.approx(
            roc_auc(transformed, labels), abs=1e-12
        )


# ---------------------------------------------------------------------------
# spearman_rho

def test_spearman_monotone_identity():
    rho, p = spearman_rho([1, 2, 3, 4], [10, 20, 30, 40])
    assert rho == 1.0
    assert p == 0.0


def test_spearman_reversal():
    rho, p = spearman_rho([1, 2, 3, 4], [9, 7, 5, 3])
    assert rho == -1.0
    assert p == 0.0


def test_spearman_tied_example_matches_oracle():
    x = [1.0, 2.0, 2.0, 4.0]
    y = [1.0, 3.0, 2.0, 4.0]
    rho, _ = spearman_rho(x, y)
    assert rho == pytest.approx(brute_force_spearman(x, y), abs=1e-12)
    # average ranks for x are [1, 2.5, 2.5, 4]
    assert rho == pytest.approx(0.9486832980505138)


def test_spearman_matches_bruteforce_with_ties():
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(3, 60))
        x = list(np.round(rng.random(n) * 4, 1))
        y = list(np.round(rng.random(n) * 4, 1))
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        rho, _ = spearman_rho(x, y)
        assert rho == pytest.approx(brute_force_spearman(x, y), abs=1e-12)


def test_spearman_matches_scipy_including_p():
    rng = np.random.default_rng(6)
    for _ in range(30):
        n = int(rng.integers(5, 40))
        x = list(np.round(rng.random(n) * 3, 1))
        y = list(np.round(rng.random(n) * 3, 1))
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        rho, p = spearman_rho(x, y)
        expected = scipy.stats.spearmanr(x, y)
        assert rho == pytest.approx(float(expected.statistic), abs=1e-12)
        if abs(rho) < 1.0:
            assert p == pytest.approx(float(expected.pvalue), abs=1e-9)


def test_spearman_invariance_and_antisymmetry():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(3, 30))
        x = list(rng.random(n))
        y = list(rng.random(n))
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        rho, _ = spearman_rho(x, y)
        rho_t, _ = spearman_rho([math.exp(v) for v in x], y)
        assert rho_t == pytest.approx(rho, abs=1e-12)
        rho_r, _ = spearman_rho([-v for v in x], y)
        assert rho_r == pytest.approx(-rho, abs=1e-12)


def test_spearman_domain_errors():
    with pytest.raises(MetricError):
        spearman_rho([1, 2], [1, 2])
    with pytest.raises(MetricError, match="variance"):
        spearman_rho([1, 1, 1], [1, 2, 3])


# ---------------------------------------------------------------------------
# stratified_auc

def test_bucket_boundaries():
    assert LengthBucket.for_length(3) is LengthBucket.SHORT
    assert LengthBucket.for_length(4) is LengthBucket.MEDIUM
    assert LengthBucket.for_length(6) is LengthBucket.MEDIUM
    assert LengthBucket.for_length(7) is LengthBucket.LONG


def test_stratified_only_short_populated():
    out = stratified_auc([0.9, 0.1, 0.8, 0.2], [True, False, True, False], [2, 2, 2, 2])
    assert set(out) == {"short"}
    assert out["short"] == 1.0


def test_stratified_equals_subset_auc():
    scores = [0.9, 0.2, 0.6, 0.4, 0.8, 0.3]
    labels = [True, False, True, False, True, False]
    lengths = [2, 3, 5, 4, 8, 9]
    out = stratified_auc(scores, labels, lengths)
    assert out["short"] == roc_auc(scores[:2], labels[:2])
    assert out["medium"] == roc_auc(scores[2:4], labels[2:4])
    assert out["long"] == roc_auc(scores[4:], labels[4:])


def test_stratified_omits_single_class_buckets():
    out = stratified_auc([0.9, 0.8, 0.1, 0.5], [True, True, False, True], [2, 2, 5, 5])
    assert "short" not in out
    assert "medium" in out


# ---------------------------------------------------------------------------
# attribute correlations

def _annotation(rating, completion, friction, coherence="AllMadeSense", sentiment="Neutral"):
    return SimpleNamespace(
        user_satisfaction=rating,
        goal_completion=completion,
        goal_friction=friction,
        coherence=coherence,
        sentiment=sentiment,
    )


def test_attribute_correlations_monotone_completion():
    annotations = [
        _annotation(1, "NoneCompleted", "LotsOfFriction"),
        _annotation(3, "SomeCompleted", "SomeFriction"),
        _annotation(5, "AllCompleted", "NoFriction"),
    ]
    report = attribute_correlations(annotations)
    rho, _ = report.attributes["goal_completion"]
    assert rho == 1.0


def test_attribute_correlations_friction_sign_conventions():
    annotations = [
        _annotation(1, "NoneCompleted", "LotsOfFriction"),
        _annotation(3, "SomeCompleted", "SomeFriction"),
        _annotation(5, "AllCompleted", "NoFriction"),
    ]
    report = attribute_correlations(annotations)
    none_high_rho, _ = report.attributes["goal_friction"]
    lots_high_rho, _ = report.friction_lots_high
    assert none_high_rho > 0
    assert lots_high_rho < 0
    assert lots_high_rho == pytest.approx(-none_high_rho)


def test_attribute_correlations_insufficient_data_is_none():
    annotations = [
        _annotation(2, "NoneCompleted", "LotsOfFriction"),
        _annotation(4, "AllCompleted", "NoFriction"),
    ]
    report = attribute_correlations(annotations)
    assert report.attributes["goal_completion"] is None


def test_attribute_correlations_constant_attribute_is_none():
    annotations = [
        _annotation(1, "AllCompleted", "NoFriction"),
        _annotation(3, "AllCompleted", "NoFriction"),
        _annotation(5, "AllCompleted", "NoFriction"),
    ]
    report = attribute_correlations(annotations)
    assert report.attributes["goal_completion"] is None
    assert report.friction_lots_high is None


# ---------------------------------------------------------------------------
# agreement

def test_agreement_examples():
    assert agreement_within_one([(5, 4)]) == 1.0
    assert agreement_within_one([(5, 3)]) == 0.0
    assert agreement_within_one([(5, 4), (5, 3), (2, 2)]) == pytest.approx(2 / 3)


def test_agreement_empty_rejected():
    with pytest.raises(MetricError):
        agreement_within_one([])


def test_agreement_invalid_rating_rejected():
    with pytest.raises(MetricError):
        agreement_within_one([(0, 4)])
    with pytest.raises(MetricError):
        agreement_within_one([(2, 6)])
