"""Evaluation math: classification reports, ROC-AUC, rank correlation,
length-stratified AUC, attribute correlations, and inter-annotator agreement.

Defect is the positive class throughout. ROC-AUC uses the pairwise
Mann-Whitney formulation (ties count one half). Spearman correlation uses
average ranks for ties, with a two-sided p-value from the Student-t
approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import stats as _scipy_stats


class MetricError(ValueError):
    """Inputs outside a metric's domain (empty, single-class, mismatched)."""


@dataclass(frozen=True)
class ClassificationReport:
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f1: float
    precision_defined: bool
    recall_defined: bool


def classification_report(
    predicted: list[bool], actual: list[bool]
) -> ClassificationReport:
    """Counts and derived metrics with defect as the positive class.

    Zero-denominator precision/recall are reported as 0.0 with the
    corresponding *_defined flag cleared.
    """
    if len(predicted) != len(actual):
        raise MetricError(
            f"length mismatch: {len(predicted)} predictions, {len(actual)} labels"
        )
    if not predicted:
        raise MetricError("need at least one prediction")
    tp = sum(1 for p, a in zip(predicted, actual) if p and a)
    fp = sum(1 for p, a in zip(predicted, actual) if p and not a)
    tn = sum(1 for p, a in zip(predicted, actual) if not p and not a)
    fn = sum(1 for p, a in zip(predicted, actual) if not p and a)
    precision_defined = tp + fp > 0
    recall_defined = tp + fn > 0
    precision = tp / (tp + fp) if precision_defined else 0.0
    recall = tp / (tp + fn) if recall_defined else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return ClassificationReport(
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the group average."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(scores: list[float], actual: list[bool]) -> float:
    """P(random positive outscores random negative), ties counting one half."""
    if len(scores) != len(actual):
        raise MetricError(
            f"length mismatch: {len(scores)} scores, {len(actual)} labels"
        )
    y = np.asarray(actual, dtype=bool)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("roc_auc needs both classes present")
    ranks = _average_ranks(s)
    pos_rank_sum = float(ranks[y].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def spearman_rho(x: list[float], y: list[float]) -> tuple[float, float]:
    """Spearman's rho over average ranks, with a two-sided t-approximation p-value."""
    if len(x) != len(y):
        raise MetricError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise MetricError("spearman_rho needs n >= 3")
    rx = _average_ranks(np.asarray(x, dtype=float))
    ry = _average_ranks(np.asarray(y, dtype=float))
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = float(np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    if denom == 0.0:
        raise MetricError("correlation undefined: zero rank variance")
    rho = float(np.sum(dx * dy) / denom)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df=n - 2))
    return rho, p


class LengthBucket(Enum):
    SHORT = "short"  # <= 3 turns
    MEDIUM = "medium"  # 4-6 turns
    LONG = "long"  # >= 7 turns

    @classmethod
    def for_length(cls, n_turns: int) -> "LengthBucket":
        if n_turns < 1:
            raise MetricError(f"dialog length must be >= 1, got {n_turns}")
        if n_turns <= 3:
            return cls.SHORT
        if n_turns <= 6:
            return cls.MEDIUM
        return cls.LONG


def stratified_auc(
    scores: list[float], actual: list[bool], lengths: list[int]
) -> dict[str, float]:
    """ROC-AUC per length bucket; buckets lacking both classes are omitted."""
    if not len(scores) == len(actual) == len(lengths):
        raise MetricError("scores, labels, and lengths must have equal length")
    by_bucket: dict[str, tuple[list[float], list[bool]]] = {}
    for s, a, n in zip(scores, actual, lengths):
        bucket = LengthBucket.for_length(n).value
        by_bucket.setdefault(bucket, ([], []))
        by_bucket[bucket][0].append(s)
        by_bucket[bucket][1].append(a)
    out: dict[str, float] = {}
    for bucket in (LengthBucket.SHORT, LengthBucket.MEDIUM, LengthBucket.LONG):
        if bucket.value not in by_bucket:
            continue
        b_scores, b_actual = by_bucket[bucket.value]
        if any(b_actual) and not all(b_actual):
            out[bucket.value] = roc_auc(b_scores, b_actual)
    return out


# Ordinal encodings follow each question's option order, first option = 0.
ATTRIBUTE_ENCODINGS: dict[str, dict[str, int]] = {
    "goal_completion": {"NoneCompleted": 0, "SomeCompleted": 1, "AllCompleted": 2},
    "response_coherence": {"NeverMadeSense": 0, "SomeMadeSense": 1, "AllMadeSense": 2},
    "goal_friction": {"LotsOfFriction": 0, "SomeFriction": 1, "NoFriction": 2},
    "user_sentiment": {"Negative": 0, "Neutral": 1, "Positive": 2},
}

_ATTRIBUTE_FIELDS = {
    "goal_completion": "goal_completion",
    "response_coherence": "coherence",
    "goal_friction": "goal_friction",
    "user_sentiment": "sentiment",
}


@dataclass(frozen=True)
class CorrelationReport:
    """Spearman rho and p-value per dialog attribute vs. the 1-5 rating.

    ``friction_lots_high`` restates goal friction under the reversed encoding
    (Lots = high) so the conventional negative sign is visible directly.
    """

    attributes: dict[str, tuple[float, float] | None]
    friction_lots_high: tuple[float, float] | None


def _enum_token(value) -> str:
    return value.value if isinstance(value, Enum) else str(value)


def attribute_correlations(annotations: list) -> CorrelationReport:
    """Correlate each attribute's ordinal encoding against the dialog rating.

    Accepts any objects exposing user_satisfaction plus the attribute fields
    (goal_completion, coherence, goal_friction, sentiment) as enum tokens.
    Attributes with insufficient data are reported as None.
    """
    ratings = [float(a.user_satisfaction) for a in annotations]
    attributes: dict[str, tuple[float, float] | None] = {}
    friction_lots_high: tuple[float, float] | None = None
    for name, encoding in ATTRIBUTE_ENCODINGS.items():
        field = _ATTRIBUTE_FIELDS[name]
        ordinals = [
            float(encoding[_enum_token(getattr(a, field))]) for a in annotations
        ]
        try:
            attributes[name] = spearman_rho(ordinals, ratings)
        except MetricError:
            attributes[name] = None
        if name == "goal_friction":
            reversed_ordinals = [2.0 - v for v in ordinals]
            try:
                friction_lots_high = spearman_rho(reversed_ordinals, ratings)
            except MetricError:
                friction_lots_high = None
    return CorrelationReport(
        attributes=attributes, friction_lots_high=friction_lots_high
    )


def agreement_within_one(pairs: list[tuple[int, int]]) -> float:
    """Fraction of rating pairs differing by at most one scale point."""
    if not pairs:
        raise MetricError("need at least one rating pair")
    for a, b in pairs:
        for r in (a, b):
            if not isinstance(r, int) or isinstance(r, bool) or not 1 <= r <= 5:
                raise MetricError(f"rating must be an integer in 1..5, got {r!r}")
    within = sum(1 for a, b in pairs if abs(a - b) <= 1)
    return within / len(pairs)
