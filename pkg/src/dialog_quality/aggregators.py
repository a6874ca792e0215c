"""Dialog-level baselines that reduce a sequence of turn scores to one value.

Four aggregators: arithmetic mean, last turn, union (max of mean and last,
which binarizes identically to "either exceeds the threshold"), and a
rising-linear weighting where turn i gets weight i. Scores at or above the
threshold are predicted defective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .dialogs import Dialog
from .tld import TldScoreMap

DEFAULT_THRESHOLD = 0.5


def _check_scores(scores: list[float]) -> None:
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"turn score {s} outside [0, 1]")


def mean_tld(scores: list[float]) -> float:
    """Arithmetic mean of the turn scores."""
    _check_scores(scores)
    return sum(scores) / len(scores)


def last_turn_tld(scores: list[float]) -> float:
    """The final turn's score, on the idea that recency dominates perception."""
    _check_scores(scores)
    return scores[-1]


def union_tld(scores: list[float]) -> float:
    """max(mean, last): exceeds a threshold iff either component does."""
    return max(mean_tld(scores), last_turn_tld(scores))


def rising_linear_tld(scores: list[float]) -> float:
    """Index-weighted mean (1-based weights), so later turns count more."""
    _check_scores(scores)
    weighted = sum(i * s for i, s in enumerate(scores, start=1))
    total = len(scores) * (len(scores) + 1) / 2
    return weighted / total


def binarize_score(score: float, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """True (defect) when score >= threshold; the boundary is inclusive."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold {threshold} outside (0, 1)")
    return score >= threshold


AGGREGATORS: dict[str, Callable[[list[float]], float]] = {
    "mean": mean_tld,
    "last_turn": last_turn_tld,
    "union": union_tld,
    "rising_linear": rising_linear_tld,
}

METHOD_ALIASES = {
    "mean": "mean",
    "last": "last_turn",
    "last_turn": "last_turn",
    "union": "union",
    "rising": "rising_linear",
    "rising_linear": "rising_linear",
}


@dataclass(frozen=True)
class DialogScore:
    """One method's dialog-level score and its thresholded prediction."""

    dialog_id: str
    method: str
    score: float
    predicted_defect: bool


def score_dialog(
    dialog: Dialog,
    scores: TldScoreMap,
    method: str,
    threshold: float = DEFAULT_THRESHOLD,
) -> DialogScore:
    if method not in AGGREGATORS:
        raise ValueError(f"unknown method '{method}'")
    value = AGGREGATORS[method](scores.for_dialog(dialog))
    return DialogScore(
        dialog_id=dialog.dialog_id,
        method=method,
        score=value,
        predicted_defect=binarize_score(value, threshold),
    )


def score_dialogs(
    dialogs: Iterable[Dialog],
    scores: TldScoreMap,
    methods: Iterable[str],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[DialogScore]:
    return [
        score_dialog(d, scores, m, threshold) for d in dialogs for m in methods
    ]


def write_dialog_scores(path: str | Path, rows: Iterable[DialogScore]) -> None:
    """Write dialog-score v1 JSON Lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(
                json.dumps(
                    {
                        "dialog_id": row.dialog_id,
                        "method": row.method,
                        "score": row.score,
                        "predicted_defect": row.predicted_defect,
                    }
                )
                + "\n"
            )


def read_dialog_scores(path: str | Path) -> list[DialogScore]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            rows.append(
                DialogScore(
                    dialog_id=obj["dialog_id"],
                    method=obj["method"],
                    score=obj["score"],
                    predicted_defect=obj["predicted_defect"],
                )
            )
    return rows
