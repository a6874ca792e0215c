"""Per-turn defect scores in [0, 1].

Scores normally come precomputed from an upstream turn-level model and are
loaded from "tld-scores v1" files (one JSON object per line with ``turn_id``
and ``score``). A deterministic heuristic scorer is also provided so the rest
of the pipeline can run without any external model: it combines a base score,
failure-phrase matches in the system response, and a rephrase penalty when the
user repeats their previous request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

from .dialogs import Dialog, Turn


class TldScoreError(ValueError):
    """A score file or score map violates the tld-scores contract."""


@dataclass(frozen=True)
class TldScoreMap:
    """Mapping turn_id -> defect probability in [0, 1]."""

    entries: dict[str, float]

    def __len__(self) -> int:
        return len(self.entries)

    def score(self, turn_id: str) -> float:
        if turn_id not in self.entries:
            raise TldScoreError(f"no score for turn_id '{turn_id}'")
        return self.entries[turn_id]

    def for_dialog(self, dialog: Dialog) -> list[float]:
        """Turn scores in dialog order; raises listing any missing turn ids."""
        missing = [tid for tid in dialog.turn_ids() if tid not in self.entries]
        if missing:
            raise TldScoreError(
                f"dialog '{dialog.dialog_id}' missing scores for turn_ids: "
                + ", ".join(missing)
            )
        return [self.entries[tid] for tid in dialog.turn_ids()]


@dataclass(frozen=True)
class HeuristicRuleTable:
    """Configuration for the built-in heuristic scorer.

    failure_phrases maps lowercase substrings of the system response to score
    contributions; the rephrase penalty applies when the current user text is
    at least ``rephrase_similarity_threshold`` Jaccard-similar to the previous
    user text. The final score is clamped to [0, 1].
    """

    failure_phrases: tuple[tuple[str, float], ...]
    rephrase_similarity_threshold: float = 0.6
    rephrase_penalty: float = 0.4
    base_score: float = 0.05

    def __post_init__(self) -> None:
        for name, value in (
            ("rephrase_similarity_threshold", self.rephrase_similarity_threshold),
            ("rephrase_penalty", self.rephrase_penalty),
            ("base_score", self.base_score),
        ):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        for phrase, contribution in self.failure_phrases:
            if not phrase:
                raise ValueError("failure phrase must be non-empty")
            if phrase != phrase.lower():
                raise ValueError(f"failure phrase must be lowercase: '{phrase}'")
            if not 0.0 <= contribution <= 1.0:
                raise ValueError(
                    f"contribution for '{phrase}' must be in [0, 1], got {contribution}"
                )


DEFAULT_RULES = HeuristicRuleTable(
    failure_phrases=(
        ("sorry, i don't have an answer", 0.9),
        ("i am having trouble", 0.9),
        ("try again later", 0.9),
    ),
)


def load_rule_table(path: str | Path) -> HeuristicRuleTable:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return HeuristicRuleTable(
        failure_phrases=tuple(
            (str(p["phrase"]), float(p["contribution"]))
            for p in obj.get("failure_phrases", [])
        ),
        rephrase_similarity_threshold=float(
            obj.get("rephrase_similarity_threshold", 0.6)
        ),
        rephrase_penalty=float(obj.get("rephrase_penalty", 0.4)),
        base_score=float(obj.get("base_score", 0.05)),
    )


def token_jaccard(a: str, b: str) -> float:
    """Jaccard similarity of lowercase whitespace token sets; both empty -> 1.0."""
    ta = set(a.lower().split())
    tb = set(b.lower().split())
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


def _normalize(text: str) -> str:
    # fold typographic apostrophes so phrase matching is not quote-sensitive
    return text.lower().replace("’", "'")


def heuristic_tld(
    turn: Turn,
    previous_user_text: str | None,
    rules: HeuristicRuleTable = DEFAULT_RULES,
) -> float:
    """Deterministic heuristic defect score for one turn, in [0, 1]."""
    score = rules.base_score
    response = _normalize(turn.event.system_text)
    for phrase, contribution in rules.failure_phrases:
        if phrase in response:
            score += contribution
    if previous_user_text is not None:
        similarity = token_jaccard(previous_user_text, turn.event.user_text)
        if similarity >= rules.rephrase_similarity_threshold:
            score += rules.rephrase_penalty
    return min(1.0, max(0.0, score))


def heuristic_scores(
    dialogs: Iterable[Dialog], rules: HeuristicRuleTable = DEFAULT_RULES
) -> TldScoreMap:
    """Score every turn of every dialog with the heuristic scorer."""
    entries: dict[str, float] = {}
    for dialog in dialogs:
        previous: str | None = None
        for turn in dialog.turns:
            entries[turn.event.turn_id] = heuristic_tld(turn, previous, rules)
            previous = turn.event.user_text
    return TldScoreMap(entries)


def load_scores(
    source: str | Path | TextIO, dialogs: list[Dialog]
) -> TldScoreMap:
    """Load a tld-scores v1 file and check it covers every turn of ``dialogs``."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = list(source)
    entries: dict[str, float] = {}
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise TldScoreError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict) or "turn_id" not in obj or "score" not in obj:
            raise TldScoreError(f"line {line_no}: expected turn_id and score fields")
        turn_id = obj["turn_id"]
        score = obj["score"]
        if not isinstance(turn_id, str) or not turn_id:
            raise TldScoreError(f"line {line_no}: turn_id must be a non-empty string")
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise TldScoreError(f"line {line_no}: score must be a number")
        if not 0.0 <= score <= 1.0:
            raise TldScoreError(
                f"line {line_no}: score {score} for turn_id '{turn_id}' "
                "outside [0, 1]"
            )
        if turn_id in entries:
            raise TldScoreError(f"line {line_no}: duplicate turn_id '{turn_id}'")
        entries[turn_id] = float(score)
    missing = [
        tid for d in dialogs for tid in d.turn_ids() if tid not in entries
    ]
    if missing:
        raise TldScoreError(
            "score file missing turn_ids: " + ", ".join(sorted(missing))
        )
    return TldScoreMap(entries)


def write_scores(path: str | Path, scores: TldScoreMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for turn_id, score in scores.entries.items():
            fh.write(json.dumps({"turn_id": turn_id, "score": score}) + "\n")
