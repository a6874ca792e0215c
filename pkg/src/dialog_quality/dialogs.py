"""Dialog data model, log ingestion, validation, and session segmentation.

Input logs are newline-delimited JSON ("dialog-log v1"), one utterance event
per line. Events from pre-sessionized sources carry a ``dialog_id`` and are
grouped directly; everything else is split into sessions with a time-gap
heuristic: a new dialog starts whenever the inactivity gap between consecutive
events of the same user exceeds the configured number of seconds (gaps equal
to the limit stay in the same session).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

DEFAULT_GAP_SECONDS = 180

_REQUIRED_LOG_KEYS = ("user_id", "timestamp", "turn_id", "user_text", "system_text")


class DialogLogError(ValueError):
    """A log line or event stream violates the dialog-log input contract."""


class DialogValidationError(ValueError):
    """A Dialog violates one of its structural invariants."""


@dataclass(frozen=True)
class RawUtteranceEvent:
    """One user request / system response exchange from the raw log."""

    user_id: str
    timestamp: int
    turn_id: str
    user_text: str
    system_text: str
    use_case: str = ""
    dialog_id: str | None = None  # set only for pre-sessionized sources


@dataclass(frozen=True)
class Turn:
    """An utterance event at its 1-based position within a dialog."""

    index: int
    event: RawUtteranceEvent


@dataclass(frozen=True)
class Dialog:
    """A single user session: an ordered, non-empty sequence of turns."""

    dialog_id: str
    user_id: str
    use_case: str
    turns: tuple[Turn, ...]

    def __len__(self) -> int:
        return len(self.turns)

    def turn_ids(self) -> list[str]:
        return [t.event.turn_id for t in self.turns]


def _check_event_fields(obj: dict, line_no: int) -> RawUtteranceEvent:
    for key in _REQUIRED_LOG_KEYS:
        if key not in obj:
            raise DialogLogError(f"line {line_no}: missing field '{key}'")
    for key in ("user_id", "turn_id", "user_text", "system_text"):
        if not isinstance(obj[key], str):
            raise DialogLogError(f"line {line_no}: field '{key}' must be a string")
    ts = obj["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise DialogLogError(f"line {line_no}: field 'timestamp' must be an integer")
    if ts < 0:
        raise DialogLogError(f"line {line_no}: field 'timestamp' must be >= 0")
    if not obj["turn_id"]:
        raise DialogLogError(f"line {line_no}: field 'turn_id' must be non-empty")
    if not obj["user_text"].strip():
        raise DialogLogError(f"line {line_no}: field 'user_text' must be non-empty")
    use_case = obj.get("use_case", "")
    if not isinstance(use_case, str):
        raise DialogLogError(f"line {line_no}: field 'use_case' must be a string")
    dialog_id = obj.get("dialog_id")
    if dialog_id is not None and not isinstance(dialog_id, str):
        raise DialogLogError(f"line {line_no}: field 'dialog_id' must be a string")
    return RawUtteranceEvent(
        user_id=obj["user_id"],
        timestamp=ts,
        turn_id=obj["turn_id"],
        user_text=obj["user_text"],
        system_text=obj["system_text"],
        use_case=use_case,
        dialog_id=dialog_id,
    )


def parse_dialog_log(lines: Iterable[str]) -> list[RawUtteranceEvent]:
    """Parse a dialog-log v1 stream into events, in file order.

    Raises DialogLogError naming the offending line number and field for
    malformed records, and on duplicate turn_id values.
    """
    events: list[RawUtteranceEvent] = []
    seen_turn_ids: set[str] = set()
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise DialogLogError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise DialogLogError(f"line {line_no}: expected a JSON object")
        event = _check_event_fields(obj, line_no)
        if event.turn_id in seen_turn_ids:
            raise DialogLogError(f"line {line_no}: duplicate turn_id '{event.turn_id}'")
        seen_turn_ids.add(event.turn_id)
        events.append(event)
    return events


def _build_dialog(events: list[RawUtteranceEvent]) -> Dialog:
    first = events[0]
    turns = tuple(Turn(index=i + 1, event=ev) for i, ev in enumerate(events))
    return Dialog(
        dialog_id=f"{first.user_id}-{first.timestamp}",
        user_id=first.user_id,
        use_case=first.use_case,
        turns=turns,
    )


def segment_sessions(
    events: list[RawUtteranceEvent], gap_seconds: int = DEFAULT_GAP_SECONDS
) -> list[Dialog]:
    """Split events into per-user sessions on inactivity gaps.

    Requires input sorted by (user_id, timestamp). A gap strictly greater
    than ``gap_seconds`` starts a new dialog; a gap equal to it does not.
    Dialog ids are deterministic: ``user_id + "-" + first event timestamp``.
    """
    if gap_seconds <= 0:
        raise ValueError("gap_seconds must be > 0")
    if not events:
        return []
    for i in range(1, len(events)):
        prev, cur = events[i - 1], events[i]
        if (prev.user_id, prev.timestamp) > (cur.user_id, cur.timestamp):
            raise DialogLogError(
                f"events not sorted by (user_id, timestamp) at position {i}"
            )
    dialogs: list[Dialog] = []
    current: list[RawUtteranceEvent] = [events[0]]
    for ev in events[1:]:
        prev = current[-1]
        new_user = ev.user_id != prev.user_id
        if new_user or ev.timestamp - prev.timestamp > gap_seconds:
            dialogs.append(_build_dialog(current))
            current = [ev]
        else:
            current.append(ev)
    dialogs.append(_build_dialog(current))
    return dialogs


def group_presessionized(events: list[RawUtteranceEvent]) -> list[Dialog]:
    """Group events that already carry a dialog_id, bypassing segmentation.

    Groups appear in first-seen order; events keep their relative order.
    """
    groups: dict[str, list[RawUtteranceEvent]] = {}
    for i, ev in enumerate(events):
        if ev.dialog_id is None:
            raise DialogLogError(f"event at position {i} has no dialog_id")
        groups.setdefault(ev.dialog_id, []).append(ev)
    dialogs = []
    for dialog_id, group in groups.items():
        first = group[0]
        for ev in group:
            if ev.user_id != first.user_id:
                raise DialogLogError(
                    f"dialog '{dialog_id}' mixes user_ids "
                    f"('{first.user_id}' and '{ev.user_id}')"
                )
        turns = tuple(Turn(index=i + 1, event=ev) for i, ev in enumerate(group))
        dialogs.append(
            Dialog(
                dialog_id=dialog_id,
                user_id=first.user_id,
                use_case=first.use_case,
                turns=turns,
            )
        )
    return dialogs


def validate_dialog(d: Dialog) -> Dialog:
    """Return ``d`` unchanged if all invariants hold, else raise with the turn index."""
    if not d.turns:
        raise DialogValidationError(f"dialog '{d.dialog_id}': no turns")
    for pos, turn in enumerate(d.turns):
        if turn.index != pos + 1:
            raise DialogValidationError(
                f"dialog '{d.dialog_id}': turn at position {pos + 1} "
                f"has index {turn.index}, expected {pos + 1}"
            )
        if turn.event.user_id != d.user_id:
            raise DialogValidationError(
                f"dialog '{d.dialog_id}': turn {turn.index} has user_id "
                f"'{turn.event.user_id}', expected '{d.user_id}'"
            )
    for prev, cur in zip(d.turns, d.turns[1:]):
        if cur.event.timestamp < prev.event.timestamp:
            raise DialogValidationError(
                f"dialog '{d.dialog_id}': turn {cur.index} timestamp decreases"
            )
    return d


def event_to_dict(ev: RawUtteranceEvent) -> dict:
    obj = {
        "user_id": ev.user_id,
        "timestamp": ev.timestamp,
        "turn_id": ev.turn_id,
        "user_text": ev.user_text,
        "system_text": ev.system_text,
        "use_case": ev.use_case,
    }
    if ev.dialog_id is not None:
        obj["dialog_id"] = ev.dialog_id
    return obj


def dialog_to_dict(d: Dialog) -> dict:
    """Serialize to the dialog v1 wire shape."""
    return {
        "dialog_id": d.dialog_id,
        "user_id": d.user_id,
        "use_case": d.use_case,
        "turns": [
            {
                "index": t.index,
                "turn_id": t.event.turn_id,
                "timestamp": t.event.timestamp,
                "user_text": t.event.user_text,
                "system_text": t.event.system_text,
            }
            for t in d.turns
        ],
    }


def dialog_from_dict(obj: dict) -> Dialog:
    turns = tuple(
        Turn(
            index=t["index"],
            event=RawUtteranceEvent(
                user_id=obj["user_id"],
                timestamp=t["timestamp"],
                turn_id=t["turn_id"],
                user_text=t["user_text"],
                system_text=t["system_text"],
                use_case=obj.get("use_case", ""),
                dialog_id=obj["dialog_id"],
            ),
        )
        for t in obj["turns"]
    )
    return Dialog(
        dialog_id=obj["dialog_id"],
        user_id=obj["user_id"],
        use_case=obj.get("use_case", ""),
        turns=turns,
    )


def write_dialogs(path: str | Path, dialogs: Iterable[Dialog]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in dialogs:
            fh.write(json.dumps(dialog_to_dict(d), sort_keys=True) + "\n")


def read_dialogs(source: str | Path | TextIO) -> list[Dialog]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return [dialog_from_dict(json.loads(line)) for line in fh if line.strip()]
    return [dialog_from_dict(json.loads(line)) for line in source if line.strip()]
