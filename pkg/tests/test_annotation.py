import random
import threading

import pytest

from dialog_quality.annotation import (
    AnnotationError,
    AnnotationStore,
    Coherence,
    DqaQuestionnaire,
    GoalCompletion,
    GoalCount,
    GoalFriction,
    GoalProgression,
    Sentiment,
)
from dialog_quality.dialogs import Dialog, RawUtteranceEvent, Turn


def _dialog(dialog_id, n_turns=2, use_case="music"):
    turns = tuple(
        Turn(
            index=i + 1,
            event=RawUtteranceEvent(
                user_id=f"user-{dialog_id}",
                timestamp=i * 10,
                turn_id=f"{dialog_id}-t{i + 1}",
                user_text=f"utterance {i + 1}",
                system_text=f"response {i + 1}",
                use_case=use_case,
            ),
        )
        for i in range(n_turns)
    )
    return Dialog(dialog_id=dialog_id, user_id=f"user-{dialog_id}", use_case=use_case, turns=turns)


def _questionnaire(n_turns=2, satisfaction=4):
    return DqaQuestionnaire(
        turn_ratings=tuple([4] * n_turns),
        user_satisfaction=satisfaction,
        goal_count=GoalCount.ONE,
        goal_progression=GoalProgression.FULL_PROGRESS,
        goal_completion=GoalCompletion.ALL_COMPLETED,
        goal_friction=GoalFriction.NO_FRICTION,
        coherence=Coherence.ALL_MADE_SENSE,
        sentiment=Sentiment.POSITIVE,
    )


def test_batch_counts_ten_dialogs_fraction_point_two():
    store = AnnotationStore()
    tasks = store.create_batch([_dialog(f"d{i}") for i in range(10)], 0.2, seed=1)
    assert len(tasks) == 12
    assert sum(1 for t in tasks if t.is_dual_copy) == 2


def test_batch_fraction_zero():
    store = AnnotationStore()
    tasks = store.create_batch([_dialog(f"d{i}") for i in range(7)], 0.0, seed=1)
    assert len(tasks) == 7
    assert not any(t.is_dual_copy for t in tasks)


def test_batch_deterministic_under_seed():
    a = AnnotationStore().create_batch([_dialog(f"d{i}") for i in range(20)], 0.2, seed=9)
    b = AnnotationStore().create_batch([_dialog(f"d{i}") for i in range(20)], 0.2, seed=9)
    assert [t.to_dict() for t in a] == [t.to_dict() for t in b]


def test_batch_empty_list():
    assert AnnotationStore().create_batch([], 0.2, seed=0) == []


def test_batch_invalid_fraction():
    with pytest.raises(AnnotationError):
        AnnotationStore().create_batch([_dialog("d0")], 1.5, seed=0)


def test_claim_empty_queue_returns_none():
    assert AnnotationStore().claim_next_task("a1") is None


def test_claim_fifo_order():
    store = AnnotationStore()
    tasks = store.create_batch([_dialog(f"d{i}") for i in range(3)], 0.0, seed=0)
    claimed = store.claim_next_task("a1")
    assert claimed.task_id == tasks[0].task_id
    assert claimed.status == "claimed"


def test_dual_copies_never_reach_same_annotator():
    store = AnnotationStore()
    store.create_batch([_dialog("d0")], 1.0, seed=0)
    first = store.claim_next_task("a1")
    assert first is not None
    second = store.claim_next_task("a1")
    assert second is None  # only the dual copy of d0 remains
    other = store.claim_next_task("a2")
    assert other is not None
    assert other.dialog_id == "d0"


def test_submit_roundtrip():
    store = AnnotationStore()
    store.create_batch([_dialog("d0", n_turns=3)], 0.0, seed=0)
    task = store.claim_next_task("a1")
    record = store.submit_annotation(task.task_id, _questionnaire(n_turns=3))
    assert record.dialog_id == "d0"
    assert record.annotator_id == "a1"
    assert store.tasks()[0].status == "submitted"


def test_submit_wrong_turn_count():
    store = AnnotationStore()
    store.create_batch([_dialog("d0", n_turns=3)], 0.0, seed=0)
    task = store.claim_next_task("a1")
    with pytest.raises(AnnotationError, match="3 turns"):
        store.submit_annotation(task.task_id, _questionnaire(n_turns=2))


def test_submit_unclaimed_task_rejected():
    store = AnnotationStore()
    tasks = store.create_batch([_dialog("d0")], 0.0, seed=0)
    with pytest.raises(AnnotationError, match="claimed"):
        store.submit_annotation(tasks[0].task_id, _questionnaire())


def test_resubmission_rejected():
    store = AnnotationStore()
    store.create_batch([_dialog("d0")], 0.0, seed=0)
    task = store.claim_next_task("a1")
    store.submit_annotation(task.task_id, _questionnaire())
    with pytest.raises(AnnotationError, match="already"):
        store.submit_annotation(task.task_id, _questionnaire())


def test_questionnaire_rating_out_of_range():
    with pytest.raises(AnnotationError, match="user_satisfaction"):
        _questionnaire(satisfaction=6)


def test_questionnaire_from_dict_missing_field():
    payload = _questionnaire().to_dict()
    del payload["goal_friction"]
    with pytest.raises(AnnotationError, match="goal_friction"):
        DqaQuestionnaire.from_dict(payload)


def test_questionnaire_from_dict_bad_enum():
    payload = _questionnaire().to_dict()
    payload["sentiment"] = "Grumpy"
    with pytest.raises(AnnotationError):
        DqaQuestionnaire.from_dict(payload)


def test_export_single_annotation():
    store = AnnotationStore()
    store.create_batch([_dialog("d0")], 0.0, seed=0)
    task = store.claim_next_task("a1")
    store.submit_annotation(task.task_id, _questionnaire(satisfaction=4))
    rows = store.export_training_set()
    assert len(rows) == 1
    dialog, rating, label = rows[0]
    assert dialog.dialog_id == "d0"
    assert rating == 4
    assert label is False


def test_export_dual_takes_minimum_rating():
    store = AnnotationStore()
    store.create_batch([_dialog("d0")], 1.0, seed=0)
    t1 = store.claim_next_task("a1")
    t2 = store.claim_next_task("a2")
    store.submit_annotation(t1.task_id, _questionnaire(satisfaction=4))
    store.submit_annotation(t2.task_id, _questionnaire(satisfaction=5))
    rows = store.export_training_set()
    assert rows[0][1] == 4


def test_export_empty_store():
    assert AnnotationStore().export_training_set() == []


def test_export_only_complete_questionnaires():
    store = AnnotationStore()
    store.create_batch([_dialog("d0"), _dialog("d1")], 0.0, seed=0)
    task = store.claim_next_task("a1")
    store.submit_annotation(task.task_id, _questionnaire())
    rows = store.export_training_set()
    assert [d.dialog_id for d, _, _ in rows] == [task.dialog_id]


def test_export_prefix_property():
    store = AnnotationStore()
    store.create_batch([_dialog(f"d{i}") for i in range(4)], 0.0, seed=0)
    exports = []
    for i in range(4):
        task = store.claim_next_task(f"a{i}")
        store.submit_annotation(task.task_id, _questionnaire())
        exports.append([d.dialog_id for d, _, _ in store.export_training_set()])
    for earlier, later in zip(exports, exports[1:]):
        assert later[: len(earlier)] == earlier


def test_agreement_report_pairs():
    store = AnnotationStore()
    store.create_batch([_dialog("d0"), _dialog("d1")], 1.0, seed=0)
    ratings = {"d0": (4, 5), "d1": (2, 5)}
    for annotator in ("a1", "a2"):
        while True:
            task = store.claim_next_task(annotator)
            if task is None:
                break
            rating = ratings[task.dialog_id][0 if annotator == "a1" else 1]
            store.submit_annotation(task.task_id, _questionnaire(satisfaction=rating))
    report = store.agreement_report()
    assert report.dual_pairs == 2
    assert report.overall_within_one == pytest.approx(0.5)
    assert report.per_annotator == {"a1": 2, "a2": 2}


def test_agreement_no_dual_pairs_rejected():
    store = AnnotationStore()
    store.create_batch([_dialog("d0")], 0.0, seed=0)
    task = store.claim_next_task("a1")
    store.submit_annotation(task.task_id, _questionnaire())
    with pytest.raises(AnnotationError, match="dual"):
        store.agreement_report()


def test_persistence_replay(tmp_path):
    path = tmp_path / "store.jsonl"
    store = AnnotationStore(path)
    store.create_batch([_dialog("d0", n_turns=2)], 1.0, seed=3)
    task = store.claim_next_task("a1")
    store.submit_annotation(task.task_id, _questionnaire(satisfaction=2))

    again = AnnotationStore(path)
    assert [t.to_dict() for t in again.tasks()] == [t.to_dict() for t in store.tasks()]
    rows = again.export_training_set()
    assert rows[0][1] == 2 and rows[0][2] is True
    # replayed store continues the same queue
    follow_up = again.claim_next_task("a2")
    assert follow_up is not None and follow_up.dialog_id == "d0"


def _dual_invariant_holds(store):
    ownership = {}
    for task in store.tasks():
        if task.annotator_id is None:
            continue
        key = (task.dialog_id, task.annotator_id)
        if key in ownership:
            return False
        ownership[key] = task.task_id
    return True


def test_randomized_interleavings_preserve_dual_invariant():
    rng = random.Random(231)
    for trial in range(1000):
        store = AnnotationStore()
        n_dialogs = rng.randint(1, 6)
        store.create_batch(
            [_dialog(f"d{trial}-{i}", n_turns=1) for i in range(n_dialogs)],
            dual_fraction=rng.choice([0.2, 0.5, 1.0]),
            seed=trial,
        )
        annotators = [f"a{k}" for k in range(rng.randint(1, 3))]
        claimed = []
        for _ in range(rng.randint(1, 14)):
            if claimed and rng.random() < 0.4:
                task = claimed.pop(rng.randrange(len(claimed)))
                store.submit_annotation(task.task_id, _questionnaire(n_turns=1))
            else:
                task = store.claim_next_task(rng.choice(annotators))
                if task is not None:
                    claimed.append(task)
        assert _dual_invariant_holds(store)


def test_threaded_claims_never_double_claim():
    store = AnnotationStore()
    store.create_batch([_dialog(f"d{i}") for i in range(30)], 1.0, seed=5)
    results = []
    lock = threading.Lock()

    def worker(annotator):
        while True:
            task = store.claim_next_task(annotator)
            if task is None:
                return
            with lock:
                results.append((task.task_id, annotator))

    threads = [threading.Thread(target=worker, args=(f"a{k}",)) for k in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    task_ids = [tid for tid, _ in results]
    assert len(task_ids) == len(set(task_ids))
    assert _dual_invariant_holds(store)
