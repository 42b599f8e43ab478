"""Online feedback (trigger family, snapshot) and offline feedback (tag).

The engine hands every finalized position to :func:`evaluate_feedback`;
the resulting events are routed by :class:`FeedbackRouter` to a text
stream, the diagnostics stream, or tag sinks.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, TextIO

from lola.errors import LolaError, SpecError
from lola.logs import format_cell, format_row
from lola.syntax import FeedbackDecl, StreamType

Value = object


@dataclass(frozen=True)
class FeedbackEvent:
    kind: str  # trigger | trigger_once | trigger_change | snapshot | tag | error
    position: int
    message: str = ""
    timestamp: float | None = None
    payload: tuple[tuple[str, Value], ...] = ()
    location: str | None = None
    decl: int | None = None  # index into the specification's feedback list


@dataclass
class FeedbackState:
    latched: list[bool]
    previous: list[bool | None]
    counts: list[int]

    @classmethod
    def initial(cls, n: int) -> FeedbackState:
        return cls([False] * n, [None] * n, [0] * n)


def evaluate_feedback(
    decls: Sequence[FeedbackDecl],
    conditions: Sequence[bool | None],
    position: int,
    lookup: Callable[[str], Value],
    state: FeedbackState,
    snapshot_streams: Sequence[str] = (),
    timestamp: float | None = None,
) -> list[FeedbackEvent]:
    """Fire the declarations for one finalized position.

    ``conditions[i]`` is the value of declaration i's condition at
    ``position`` (None for a condition-less snapshot). ``trigger_change``
    never fires at position 0.
    """
    events = []
    for i, (decl, cond) in enumerate(zip(decls, conditions)):
        kind = decl.kind
        fire = False
        if kind == "trigger":
            fire = cond is True
        elif kind == "trigger_once":
            if cond is True and not state.latched[i]:
                state.latched[i] = fire = True
        elif kind == "trigger_change":
            prev = state.previous[i]
            fire = prev is not None and cond != prev
            state.previous[i] = cond
        elif kind == "snapshot":
            fire = cond is None or cond is True
        elif kind == "tag":
            fire = cond is True
        if not fire:
            continue
        state.counts[i] += 1
        if kind == "snapshot":
            payload = tuple((name, lookup(name)) for name in snapshot_streams)
            events.append(FeedbackEvent(kind, position, decl.message, timestamp, payload, decl=i))
        elif kind == "tag":
            payload = tuple((target, lookup(src)) for src, target in zip(decl.sources, decl.targets))
            events.append(FeedbackEvent(kind, position, "", timestamp, payload, decl.location, decl=i))
        else:
            events.append(FeedbackEvent(kind, position, decl.message, timestamp, decl=i))
    return events


def _fmt_value(v: Value) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    return format_cell(v)


def format_notification(ev: FeedbackEvent) -> str:
    """``position=<j> time=<t> kind=<kind> msg=<message>`` plus ``key=value``
    pairs for snapshots. Messages are JSON-quoted."""
    parts = [f"position={ev.position}"]
    if ev.timestamp is not None:
        parts.append(f"time={format_cell(ev.timestamp)}")
    parts.append(f"kind={ev.kind}")
    parts.append(f"msg={json.dumps(ev.message)}")
    parts.extend(f"{k}={_fmt_value(v)}" for k, v in ev.payload)
    return " ".join(parts)


class TagSink:
    """A derived log file: header once, then one row per firing."""

    def __init__(self, path: str | os.PathLike, columns: Sequence[str]):
        self.path = Path(path)
        self.columns = tuple(columns)
        self.rows = 0
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self.path, "w", encoding="utf-8", newline="")
            self._fh.write(",".join(self.columns) + "\n")
        except OSError as exc:
            raise SinkError(f"cannot write tag output {self.path}: {exc}") from exc

    def close(self) -> None:
        self._fh.close()


class SinkError(LolaError):
    exit_code = 2


def append_tag_row(sink: TagSink, row: Sequence[Value]) -> None:
    try:
        sink._fh.write(format_row(row) + "\n")
    except OSError as exc:
        raise SinkError(f"cannot write tag output {sink.path}: {exc}") from exc
    sink.rows += 1


@dataclass
class FeedbackRouter:
    """Send notifications to ``out``, diagnostics to ``err`` and tag rows to
    per-location sinks resolved against ``out_dir``."""

    decls: Sequence[FeedbackDecl]
    out: TextIO = field(default_factory=lambda: sys.stdout)
    err: TextIO = field(default_factory=lambda: sys.stderr)
    out_dir: Path | None = None
    sinks: dict[int, TagSink] = field(default_factory=dict)
    fire_counts: list[int] = field(default_factory=list)
    errors: int = 0

    def __post_init__(self) -> None:
        self.fire_counts = [0] * len(self.decls)
        seen: dict[Path, int] = {}
        for i, decl in enumerate(self.decls):
            if decl.kind != "tag":
                continue
            path = Path(decl.location)
            if self.out_dir is not None and not path.is_absolute():
                path = Path(self.out_dir) / path
            key = path.resolve()
            if key in seen:
                raise SpecError(f"tag declarations {seen[key]} and {i} write the same file {path}")
            seen[key] = i
        for i, decl in enumerate(self.decls):
            if decl.kind == "tag":
                path = Path(decl.location)
                if self.out_dir is not None and not path.is_absolute():
                    path = Path(self.out_dir) / path
                self.sinks[i] = TagSink(path, decl.targets)

    def route(self, events: Sequence[FeedbackEvent]) -> None:
        for ev in events:
            if ev.kind == "error":
                self.errors += 1
                self.err.write(format_notification(ev) + "\n")
                continue
            self.fire_counts[ev.decl] += 1
            if ev.kind == "tag":
                append_tag_row(self.sinks[ev.decl], [v for _, v in ev.payload])
            else:
                self.out.write(format_notification(ev) + "\n")

    def close(self) -> None:
        for sink in self.sinks.values():
            sink.close()


def tag_column_types(decl: FeedbackDecl, types: dict[str, StreamType]) -> list[StreamType]:
    return [types[s] for s in decl.sources]
