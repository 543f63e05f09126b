"""Append-only run journal.

One JSON object per line, canonically serialized (sorted keys, compact
separators) so identical runs produce byte-identical files. Events carry a
contiguous sequence number, a kind, a payload, and a timestamp that is
wall-clock only for hardware sessions; deterministic runs record null so
replays and re-runs stay byte-exact.

Replay is verify-and-continue: a resumed engine recomputes the run and every
event it would emit is checked against the journaled prefix before the
journal switches to append mode. Any divergence is corruption. A truncated
final line (a crash mid-write) is discarded with a warning; damage anywhere
earlier is an error.
"""

from __future__ import annotations

import json
import logging
import os
import time
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

EVENT_KINDS = (
    "run-config",
    "init-member",
    "evaluation-request",
    "measurement",
    "model-training-marker",
    "insertion",
    "run-complete",
)


class JournalError(Exception):
    pass


class JournalCorruption(JournalError):
    pass


def to_native(value):
    """Coerce numpy scalars/arrays so canonical JSON never depends on numpy."""
    if isinstance(value, dict):
        return {str(k): to_native(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_native(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [to_native(v) for v in value.tolist()]
    return value


def canonical_line(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"), allow_nan=False)


def parse_events(text: str, *, tolerate_trailing: bool = True) -> tuple[list[dict], int]:
    """Parse journal text; returns (events, byte offset of the valid prefix)."""
    events: list[dict] = []
    offset = 0
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if line == "":
            # the final newline leaves one empty tail element; anything else
            # empty mid-file is corruption
            if i == len(lines) - 1:
                break
            raise JournalCorruption(f"blank line at event {len(events)}")
        terminated = i < len(lines) - 1
        try:
            event = json.loads(line)
            if not isinstance(event, dict) or not {"seq", "kind", "data"} <= event.keys():
                raise ValueError("not an event object")
        except ValueError as exc:
            if tolerate_trailing and not terminated:
                logger.warning("discarding truncated trailing journal line: %s", exc)
                break
            raise JournalCorruption(f"malformed event at line {i}: {exc}") from None
        if not terminated:
            # valid JSON but no newline: the write was cut mid-flush
            logger.warning("discarding unterminated trailing journal line")
            break
        if event["seq"] != len(events):
            raise JournalCorruption(
                f"sequence gap: expected {len(events)}, found {event['seq']}")
        if event["kind"] not in EVENT_KINDS:
            raise JournalCorruption(f"unknown event kind {event['kind']!r}")
        events.append(event)
        offset += len(line.encode("utf-8")) + 1
    return events, offset


def load_journal(path: str | Path) -> list[dict]:
    """Read-only event access for reports and analysis."""
    text = Path(path).read_text(encoding="utf-8")
    events, _ = parse_events(text)
    return events


class Journal:
    """Verify-or-append event log.

    While a journaled prefix remains, record() checks the submitted event
    against it and consumes it; afterwards record() appends, flushing before
    returning so the engine never observes a result that was not durable.
    With path=None the journal is memory-only (used by throwaway studies).
    """

    def __init__(self, path: str | Path | None, *, wall_clock: bool = False,
                 fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.wall_clock = wall_clock
        self.fsync = fsync
        self._fh = None
        self._cursor = 0
        self.events: list[dict] = []
        if self.path is not None and self.path.exists():
            text = self.path.read_text(encoding="utf-8")
            self.events, valid_offset = parse_events(text)
            if valid_offset != len(text.encode("utf-8")):
                with open(self.path, "r+b") as fh:
                    fh.truncate(valid_offset)

    @property
    def replaying(self) -> bool:
        return self._cursor < len(self.events)

    def peek(self) -> dict | None:
        if self.replaying:
            return self.events[self._cursor]
        return None

    def next_is(self, kind: str) -> bool:
        nxt = self.peek()
        return nxt is not None and nxt["kind"] == kind

    def record(self, kind: str, data: dict) -> dict:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        data = to_native(data)
        if self.replaying:
            event = self.events[self._cursor]
            if event["kind"] != kind or event["data"] != data:
                raise JournalCorruption(
                    f"replay mismatch at seq {event['seq']}: engine produced "
                    f"{kind!r} {canonical_line(data)}, journal holds "
                    f"{event['kind']!r} {canonical_line(event['data'])}")
            self._cursor += 1
            return event
        event = {
            "seq": len(self.events),
            "ts": time.time() if self.wall_clock else None,
            "kind": kind,
            "data": data,
        }
        self._append(event)
        self.events.append(event)
        self._cursor = len(self.events)
        return event

    def _append(self, event: dict):
        if self.path is None:
            return
        if self._fh is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "a", encoding="utf-8", newline="\n")
        self._fh.write(canonical_line(event) + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
