"""Timestamped atomic context events on a totally ordered timeline.

Events are edge records (state changes), not level samples: the timeline's
state for a key is the value of its latest event. Rules query state either
point-in-time (state_at) or as run lengths (held_since).
"""

from __future__ import annotations

import heapq
import json
from bisect import bisect_right
from dataclasses import dataclass

from .errors import InvalidInputError

EVENT_KINDS = ("activity", "location", "object_use", "actuation")


@dataclass(frozen=True)
class ContextEvent:
    ts: int                      # milliseconds
    kind: str                    # one of EVENT_KINDS
    entity: str                  # e.g. "Toilet", "Kitchen", "TV"
    attribute: str               # e.g. "Occupied", "Presence", "ON"
    value: bool | str | float

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise InvalidInputError(f"unknown event kind {self.kind!r}")
        if not self.entity or not self.attribute:
            raise InvalidInputError("entity and attribute must be nonempty")

    @property
    def key(self) -> tuple[str, str]:
        return (self.entity, self.attribute)


class EventTimeline:
    """Append-only event store ordered by (ts, insertion sequence).

    ``reorder_window_ms`` > 0 enables a bounded reorder buffer: an event may
    arrive late by up to that window; older arrivals are rejected. Buffered
    events become visible to queries once they can no longer be displaced
    (or after ``flush()``).
    """

    def __init__(self, reorder_window_ms: int = 0):
        self.reorder_window_ms = int(reorder_window_ms)
        self.events: list[ContextEvent] = []
        self._index: dict[tuple[str, str], list[tuple[int, int]]] = {}
        self._pending: list[tuple[int, int, ContextEvent]] = []
        self._max_seen_ts: int | None = None
        self._seq = 0

    def __len__(self) -> int:
        return len(self.events)

    def _commit(self, event: ContextEvent) -> None:
        if self.events and event.ts < self.events[-1].ts:
            raise InvalidInputError(
                f"event at {event.ts} arrived after timeline reached {self.events[-1].ts}")
        position = len(self.events)
        self.events.append(event)
        self._index.setdefault(event.key, []).append((event.ts, position))

    def ingest(self, event: ContextEvent) -> None:
        if self.reorder_window_ms <= 0:
            if self.events and event.ts < self.events[-1].ts:
                raise InvalidInputError(
                    f"out-of-order event at {event.ts} (timeline at {self.events[-1].ts}); "
                    "enable a reorder window to buffer late arrivals")
            self._commit(event)
            return
        horizon = (self._max_seen_ts - self.reorder_window_ms
                   if self._max_seen_ts is not None else None)
        if horizon is not None and event.ts < horizon:
            raise InvalidInputError(
                f"event at {event.ts} is older than the reorder window "
                f"({self.reorder_window_ms} ms behind {self._max_seen_ts})")
        heapq.heappush(self._pending, (event.ts, self._seq, event))
        self._seq += 1
        if self._max_seen_ts is None or event.ts > self._max_seen_ts:
            self._max_seen_ts = event.ts
        while self._pending and self._pending[0][0] <= self._max_seen_ts - self.reorder_window_ms:
            self._commit(heapq.heappop(self._pending)[2])

    def flush(self) -> None:
        """Commit everything still in the reorder buffer."""
        while self._pending:
            self._commit(heapq.heappop(self._pending)[2])

    def extend(self, events) -> None:
        for e in events:
            self.ingest(e)

    def _latest_at(self, entity: str, attribute: str, t: int) -> ContextEvent | None:
        entries = self._index.get((entity, attribute))
        if not entries:
            return None
        # rightmost entry with ts <= t; insertion order breaks timestamp ties
        pos = bisect_right(entries, (int(t), len(self.events))) - 1
        if pos < 0:
            return None
        return self.events[entries[pos][1]]

    def state_at(self, entity: str, attribute: str, t: int):
        """Value of the latest event at ts <= t for the key, or None if unknown."""
        event = self._latest_at(entity, attribute, t)
        return None if event is None else event.value

    def held_since(self, entity: str, attribute: str, value, t: int):
        """How long (ms) the key has held ``value`` continuously up to ``t``.

        None when the state at ``t`` differs from ``value`` (or is unknown).
        The run starts at the earliest event of the current unbroken stretch
        of that value.
        """
        return self.run_duration(entity, attribute, lambda v: v == value, t)

    def run_duration(self, entity: str, attribute: str, predicate, t: int):
        """Length (ms) of the current unbroken run of events whose value
        satisfies ``predicate``, up to ``t``; None if it does not hold at ``t``."""
        entries = self._index.get((entity, attribute))
        if not entries:
            return None
        pos = bisect_right(entries, (int(t), len(self.events))) - 1
        if pos < 0 or not predicate(self.events[entries[pos][1]].value):
            return None
        start_ts = entries[pos][0]
        while pos > 0 and predicate(self.events[entries[pos - 1][1]].value):
            pos -= 1
            start_ts = entries[pos][0]
        return int(t) - int(start_ts)

    def keys(self):
        return self._index.keys()


# ---------------------------------------------------------------------------
# JSON-lines event files
# ---------------------------------------------------------------------------

def event_to_record(event: ContextEvent) -> dict:
    return {"ts": event.ts, "kind": event.kind, "entity": event.entity,
            "attribute": event.attribute, "value": event.value}


def event_from_record(record: dict) -> ContextEvent:
    try:
        return ContextEvent(ts=int(record["ts"]), kind=record["kind"],
                            entity=record["entity"], attribute=record["attribute"],
                            value=record["value"])
    except KeyError as exc:
        raise InvalidInputError(f"event record missing field: {exc}") from exc


def write_events_jsonl(path, events) -> None:
    with open(path, "w") as fh:
        for e in events:
            fh.write(json.dumps(event_to_record(e)) + "\n")


def read_events_jsonl(path) -> list[ContextEvent]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(event_from_record(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}:{lineno}: bad JSON ({exc})") from exc
    return out


def activity_change_events(results, spans) -> list[ContextEvent]:
    """Edge-encode classification results: events only when the label changes.

    Emits ("Activity", <name>) = False for the previous label and True for
    the new one, at the segment start. The first segment only asserts True.
    """
    out = []
    prev = None
    for (start_ms, _end_ms), result in zip(spans, results):
        name = result.label.name
        if prev is None or name != prev:
            if prev is not None:
                out.append(ContextEvent(int(start_ms), "activity", "Activity", prev, False))
            out.append(ContextEvent(int(start_ms), "activity", "Activity", name, True))
            prev = name
    return out
