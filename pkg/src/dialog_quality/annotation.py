"""DQA annotation workflow: task assignment, questionnaire validation,
persistence, agreement reporting, and training-set export.

A batch assigns every dialog one annotation task and a seeded sample of
roughly 20% of dialogs a second task for quality control. A dialog is never
given twice to the same annotator. The store is append-only (one JSON Lines
event log per store); the in-memory index is rebuilt by replay on startup.
All mutations are serialized through a single lock, so task claiming and
submission are atomic with respect to each other.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .dialogs import Dialog, dialog_from_dict, dialog_to_dict
from .features import binarize_rating
from .metrics import agreement_within_one


class AnnotationError(ValueError):
    """Workflow contract violation, carrying a machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class GoalCount(str, Enum):
    ZERO = "Zero"
    ONE = "One"
    MANY = "Many"


class GoalProgression(str, Enum):
    NO_PROGRESS = "NoProgress"
    SOME_PROGRESS = "SomeProgress"
    FULL_PROGRESS = "FullProgress"


class GoalCompletion(str, Enum):
    NONE_COMPLETED = "NoneCompleted"
    SOME_COMPLETED = "SomeCompleted"
    ALL_COMPLETED = "AllCompleted"


class GoalFriction(str, Enum):
    LOTS_OF_FRICTION = "LotsOfFriction"
    SOME_FRICTION = "SomeFriction"
    NO_FRICTION = "NoFriction"


class Coherence(str, Enum):
    NEVER_MADE_SENSE = "NeverMadeSense"
    SOME_MADE_SENSE = "SomeMadeSense"
    ALL_MADE_SENSE = "AllMadeSense"


class Sentiment(str, Enum):
    NEGATIVE = "Negative"
    NEUTRAL = "Neutral"
    POSITIVE = "Positive"


def _check_rating(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= 5:
        raise AnnotationError(
            "rating_out_of_range", f"{name} must be an integer in 1..5, got {value!r}"
        )
    return value


@dataclass(frozen=True)
class DqaQuestionnaire:
    """One annotator's complete answers: per-turn ratings first, then the
    seven dialog-level fields."""

    turn_ratings: tuple[int, ...]
    user_satisfaction: int
    goal_count: GoalCount
    goal_progression: GoalProgression
    goal_completion: GoalCompletion
    goal_friction: GoalFriction
    coherence: Coherence
    sentiment: Sentiment

    def __post_init__(self) -> None:
        if not self.turn_ratings:
            raise AnnotationError("missing_turn_ratings", "turn_ratings is empty")
        for i, r in enumerate(self.turn_ratings, start=1):
            _check_rating(r, f"turn_ratings[{i}]")
        _check_rating(self.user_satisfaction, "user_satisfaction")

    def to_dict(self) -> dict:
        return {
            "turn_ratings": list(self.turn_ratings),
            "user_satisfaction": self.user_satisfaction,
            "goal_count": self.goal_count.value,
            "goal_progression": self.goal_progression.value,
            "goal_completion": self.goal_completion.value,
            "goal_friction": self.goal_friction.value,
            "coherence": self.coherence.value,
            "sentiment": self.sentiment.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "DqaQuestionnaire":
        required = (
            "turn_ratings",
            "user_satisfaction",
            "goal_count",
            "goal_progression",
            "goal_completion",
            "goal_friction",
            "coherence",
            "sentiment",
        )
        for key in required:
            if key not in obj:
                raise AnnotationError("missing_field", f"missing field '{key}'")
        try:
            return cls(
                turn_ratings=tuple(obj["turn_ratings"]),
                user_satisfaction=obj["user_satisfaction"],
                goal_count=GoalCount(obj["goal_count"]),
                goal_progression=GoalProgression(obj["goal_progression"]),
                goal_completion=GoalCompletion(obj["goal_completion"]),
                goal_friction=GoalFriction(obj["goal_friction"]),
                coherence=Coherence(obj["coherence"]),
                sentiment=Sentiment(obj["sentiment"]),
            )
        except ValueError as exc:
            if isinstance(exc, AnnotationError):
                raise
            raise AnnotationError("invalid_enum_value", str(exc)) from exc


@dataclass
class AnnotationTask:
    task_id: str
    dialog_id: str
    annotator_id: str | None = None
    status: str = "pending"  # pending | claimed | submitted
    is_dual_copy: bool = False

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "dialog_id": self.dialog_id,
            "annotator_id": self.annotator_id,
            "status": self.status,
            "is_dual_copy": self.is_dual_copy,
        }


@dataclass(frozen=True)
class AnnotationRecord:
    task_id: str
    dialog_id: str
    annotator_id: str
    questionnaire: DqaQuestionnaire
    submitted_at: float

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "dialog_id": self.dialog_id,
            "annotator_id": self.annotator_id,
            "questionnaire": self.questionnaire.to_dict(),
            "submitted_at": self.submitted_at,
        }


@dataclass(frozen=True)
class AgreementReport:
    overall_within_one: float
    dual_pairs: int
    per_annotator: dict[str, int] = field(default_factory=dict)


class AnnotationStore:
    """Annotation state with optional JSON Lines persistence.

    Pass ``path=None`` for an ephemeral in-memory store (tests, dry runs).
    """

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._dialogs: dict[str, Dialog] = {}
        self._tasks: dict[str, AnnotationTask] = {}
        self._queue: list[str] = []  # task ids in assignment order
        self._records: dict[tuple[str, str], AnnotationRecord] = {}
        self._annotated_order: list[str] = []  # dialog ids by first record time
        if self._path is not None and self._path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                kind = event["kind"]
                if kind == "dialog":
                    d = dialog_from_dict(event["dialog"])
                    self._dialogs[d.dialog_id] = d
                elif kind == "task":
                    task = AnnotationTask(
                        task_id=event["task_id"],
                        dialog_id=event["dialog_id"],
                        is_dual_copy=event["is_dual_copy"],
                    )
                    self._tasks[task.task_id] = task
                    self._queue.append(task.task_id)
                elif kind == "claim":
                    task = self._tasks[event["task_id"]]
                    task.annotator_id = event["annotator_id"]
                    task.status = "claimed"
                elif kind == "submit":
                    task = self._tasks[event["task_id"]]
                    record = AnnotationRecord(
                        task_id=task.task_id,
                        dialog_id=task.dialog_id,
                        annotator_id=task.annotator_id,
                        questionnaire=DqaQuestionnaire.from_dict(
                            event["questionnaire"]
                        ),
                        submitted_at=event["submitted_at"],
                    )
                    self._store_record(record)
                    task.status = "submitted"

    def _append(self, event: dict) -> None:
        if self._path is None:
            return
        with open(self._path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _store_record(self, record: AnnotationRecord) -> None:
        if record.dialog_id not in self._annotated_order:
            self._annotated_order.append(record.dialog_id)
        self._records[(record.dialog_id, record.annotator_id)] = record

    # ------------------------------------------------------------------
    # batch creation

    def create_batch(
        self, dialogs: list[Dialog], dual_fraction: float = 0.2, seed: int = 0
    ) -> list[AnnotationTask]:
        """Register dialogs and enqueue tasks; a seeded sample of
        round(dual_fraction * n) dialogs gets a second task."""
        if not 0.0 <= dual_fraction <= 1.0:
            raise AnnotationError(
                "invalid_dual_fraction",
                f"dual_fraction must be in [0, 1], got {dual_fraction}",
            )
        if not dialogs:
            return []
        with self._lock:
            for d in dialogs:
                if d.dialog_id in self._dialogs:
                    raise AnnotationError(
                        "duplicate_dialog", f"dialog '{d.dialog_id}' already stored"
                    )
            rng = random.Random(seed)
            n_dual = round(dual_fraction * len(dialogs))
            dual_ids = set(
                d.dialog_id for d in rng.sample(dialogs, n_dual)
            )
            pending: list[AnnotationTask] = []
            counter = len(self._tasks)
            for d in dialogs:
                pending.append(
                    AnnotationTask(
                        task_id=f"t{counter:06d}",
                        dialog_id=d.dialog_id,
                        is_dual_copy=False,
                    )
                )
                counter += 1
                if d.dialog_id in dual_ids:
                    pending.append(
                        AnnotationTask(
                            task_id=f"t{counter:06d}",
                            dialog_id=d.dialog_id,
                            is_dual_copy=True,
                        )
                    )
                    counter += 1
            rng.shuffle(pending)
            for d in dialogs:
                self._dialogs[d.dialog_id] = d
                self._append({"kind": "dialog", "dialog": dialog_to_dict(d)})
            for task in pending:
                self._tasks[task.task_id] = task
                self._queue.append(task.task_id)
                self._append(
                    {
                        "kind": "task",
                        "task_id": task.task_id,
                        "dialog_id": task.dialog_id,
                        "is_dual_copy": task.is_dual_copy,
                    }
                )
            return [AnnotationTask(**t.to_dict()) for t in pending]

    # ------------------------------------------------------------------
    # claiming and submission

    def _annotator_has_dialog(self, annotator_id: str, dialog_id: str) -> bool:
        return any(
            t.dialog_id == dialog_id and t.annotator_id == annotator_id
            for t in self._tasks.values()
        )

    def claim_next_task(self, annotator_id: str) -> AnnotationTask | None:
        """Claim the oldest pending task this annotator may work on, if any."""
        if not annotator_id:
            raise AnnotationError("invalid_annotator", "annotator_id must be non-empty")
        with self._lock:
            for task_id in self._queue:
                task = self._tasks[task_id]
                if task.status != "pending":
                    continue
                if self._annotator_has_dialog(annotator_id, task.dialog_id):
                    continue
                task.annotator_id = annotator_id
                task.status = "claimed"
                self._append(
                    {
                        "kind": "claim",
                        "task_id": task.task_id,
                        "annotator_id": annotator_id,
                    }
                )
                return AnnotationTask(**task.to_dict())
            return None

    def submit_annotation(
        self, task_id: str, questionnaire: DqaQuestionnaire
    ) -> AnnotationRecord:
        """Persist a complete questionnaire for a claimed task (append-only)."""
        with self._lock:
            task = self._tasks.get(task_id)
            if task is None:
                raise AnnotationError("task_not_found", f"no task '{task_id}'")
            if task.status == "submitted":
                raise AnnotationError(
                    "already_submitted", f"task '{task_id}' was already submitted"
                )
            if task.status != "claimed":
                raise AnnotationError(
                    "task_not_claimed", f"task '{task_id}' has not been claimed"
                )
            dialog = self._dialogs[task.dialog_id]
            if len(questionnaire.turn_ratings) != len(dialog.turns):
                raise AnnotationError(
                    "wrong_turn_count",
                    f"dialog '{dialog.dialog_id}' has {len(dialog.turns)} turns, "
                    f"got {len(questionnaire.turn_ratings)} turn ratings",
                )
            record = AnnotationRecord(
                task_id=task.task_id,
                dialog_id=task.dialog_id,
                annotator_id=task.annotator_id,
                questionnaire=questionnaire,
                submitted_at=time.time(),
            )
            task.status = "submitted"
            self._store_record(record)
            self._append(
                {
                    "kind": "submit",
                    "task_id": task.task_id,
                    "questionnaire": questionnaire.to_dict(),
                    "submitted_at": record.submitted_at,
                }
            )
            return record

    # ------------------------------------------------------------------
    # reads

    def get_dialog(self, dialog_id: str) -> Dialog:
        if dialog_id not in self._dialogs:
            raise AnnotationError("dialog_not_found", f"no dialog '{dialog_id}'")
        return self._dialogs[dialog_id]

    def tasks(self) -> list[AnnotationTask]:
        return [AnnotationTask(**self._tasks[tid].to_dict()) for tid in self._queue]

    def records(self) -> list[AnnotationRecord]:
        return list(self._records.values())

    def export_training_set(
        self, rating_field: str = "user_satisfaction"
    ) -> list[tuple[Dialog, int, bool]]:
        """One row per annotated dialog, in first-annotation order.

        Dual-annotated dialogs resolve to the minimum rating (conservative
        toward defect); the label is the binarized rating.
        """
        if rating_field != "user_satisfaction":
            raise AnnotationError(
                "invalid_rating_field",
                f"unsupported rating field '{rating_field}'",
            )
        rows: list[tuple[Dialog, int, bool]] = []
        with self._lock:
            for dialog_id in self._annotated_order:
                ratings = [
                    r.questionnaire.user_satisfaction
                    for (d_id, _), r in self._records.items()
                    if d_id == dialog_id
                ]
                rating = min(ratings)
                rows.append(
                    (self._dialogs[dialog_id], rating, binarize_rating(rating))
                )
        return rows

    def agreement_report(self) -> AgreementReport:
        """Within-one agreement over the user_satisfaction ratings of
        dual-annotated dialogs that have both records."""
        with self._lock:
            by_dialog: dict[str, list[AnnotationRecord]] = {}
            for record in self._records.values():
                by_dialog.setdefault(record.dialog_id, []).append(record)
            pairs = []
            for records in by_dialog.values():
                if len(records) == 2:
                    pairs.append(
                        (
                            records[0].questionnaire.user_satisfaction,
                            records[1].questionnaire.user_satisfaction,
                        )
                    )
            if not pairs:
                raise AnnotationError(
                    "no_dual_pairs", "no dual-annotated dialog has both records"
                )
            per_annotator: dict[str, int] = {}
            for record in self._records.values():
                per_annotator[record.annotator_id] = (
                    per_annotator.get(record.annotator_id, 0) + 1
                )
            return AgreementReport(
                overall_within_one=agreement_within_one(pairs),
                dual_pairs=len(pairs),
                per_annotator=per_annotator,
            )
