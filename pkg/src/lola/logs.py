"""Event logs: CSV reading (offline), line-delimited streams with evalstep
batching (online), and writing derived logs in the same format.

Format: a header row of column names, then one record per line. Cells are
comma-separated with optional surrounding whitespace; lines starting with
``#`` are comments. Strings may be double-quoted (``""`` escapes a quote),
booleans are ``0``/``1``/``true``/``false``, doubles use the shortest
round-trip representation.
"""

from __future__ import annotations

import contextlib
import csv
import logging
import math
import socket
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from lola.errors import LogFormatError
from lola.syntax import StreamDecl, StreamType

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Event:
    """One synchronous tick: a value for every input stream."""

    position: int
    values: dict[str, object]


def format_cell(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        if "\n" in v or "\r" in v or "\0" in v:
            raise ValueError(f"line breaks and NUL cannot be logged: {v!r}")
        return '"' + v.replace('"', '""') + '"'
    raise TypeError(f"cannot serialise {v!r}")


def format_row(values: Iterable[object]) -> str:
    return ",".join(format_cell(v) for v in values)


def parse_cell(text: str, type_: StreamType) -> object:
    """Raises ValueError on malformed input."""
    if type_ is StreamType.STRING:
        return text
    t = text.strip()
    if type_ is StreamType.DOUBLE:
        if "_" in t:
            raise ValueError(t)
        return float(t)
    if type_ is StreamType.INT:
        if not t.lstrip("+-").isdigit():
            raise ValueError(t)
        return int(t)
    low = t.lower()
    if low in ("1", "true"):
        return True
    if low in ("0", "false"):
        return False
    raise ValueError(t)


def split_line(line: str) -> list[str]:
    return next(csv.reader([line], skipinitialspace=True))


def _content(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line


class RecordParser:
    """Maps raw records of a given header onto the declared input streams."""

    def __init__(self, header: Sequence[str], inputs: Sequence[StreamDecl]):
        self.header = [h.strip() for h in header]
        index = {name: i for i, name in enumerate(self.header)}
        missing = [d.name for d in inputs if d.name not in index]
        if missing:
            raise LogFormatError(f"log is missing declared input column(s): {', '.join(missing)}")
        extra = [h for h in self.header if h not in {d.name for d in inputs}]
        if extra:
            log.warning("ignoring log column(s) not declared as inputs: %s", ", ".join(extra))
        self.columns = [(d.name, d.type, index[d.name]) for d in inputs]

    def parse(self, cells: Sequence[str], row: int) -> dict[str, object]:
        if len(cells) != len(self.header):
            raise LogFormatError(f"expected {len(self.header)} cells, found {len(cells)}", row=row)
        values = {}
        for name, type_, i in self.columns:
            try:
                values[name] = parse_cell(cells[i], type_)
            except ValueError:
                raise LogFormatError(f"cannot parse {cells[i]!r} as {type_}", row=row, column=name) from None
        return values


def read_events(lines: Iterable[str], inputs: Sequence[StreamDecl]) -> Iterator[Event]:
    content = _content(lines)
    try:
        _, header_line = next(content)
    except StopIteration:
        raise LogFormatError("log has no header row") from None
    parser = RecordParser(split_line(header_line), inputs)
    for position, (lineno, line) in enumerate(content):
        yield Event(position, parser.parse(split_line(line), lineno))


def read_log(path: str | Path, inputs: Sequence[StreamDecl]) -> Iterator[Event]:
    """Yield events of a CSV log in file order, positions 0, 1, 2, ..."""
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise LogFormatError(f"cannot open log {path}: {exc}") from exc
    with fh:
        yield from read_events(fh, inputs)


def read_stream(
    lines: Iterable[str],
    inputs: Sequence[StreamDecl],
    evalstep: int = 1,
    strict: bool = True,
) -> Iterator[list[Event]]:
    """Group a line-delimited record stream into batches of ``evalstep``
    events; a partial batch is flushed at end of stream.

    In strict mode a malformed record aborts with :class:`LogFormatError`.
    Otherwise it is reported and replaced by the previous record's values,
    so positions stay consecutive.
    """
    if evalstep < 1:
        raise ValueError("evalstep must be >= 1")
    content = _content(lines)
    try:
        _, header_line = next(content)
    except StopIteration:
        return
    parser = RecordParser(split_line(header_line), inputs)
    batch: list[Event] = []
    previous: dict[str, object] | None = None
    position = 0
    for lineno, line in content:
        try:
            values = parser.parse(split_line(line), lineno)
        except (LogFormatError, csv.Error) as exc:
            if strict or previous is None:
                raise
            log.warning("line %d: %s; repeating previous record", lineno, exc)
            values = previous
        previous = values
        batch.append(Event(position, values))
        position += 1
        if len(batch) == evalstep:
            yield batch
            batch = []
    if batch:
        yield batch


def write_log(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")


def same_value(a: object, b: object) -> bool:
    """Equality that treats NaN as equal to itself (bit-level round-trip)."""
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return type(a) is type(b) and a == b


@contextlib.contextmanager
def open_source(origin: str | None = None, listen: str | None = None) -> Iterator[Iterable[str]]:
    """Line source for online mode: a file path, ``-`` for standard input,
    or ``host:port`` to accept one TCP connection."""
    if listen:
        host, _, port = listen.rpartition(":")
        with socket.create_server((host or "127.0.0.1", int(port))) as server:
            conn, _ = server.accept()
            with conn, conn.makefile("r", encoding="utf-8", newline="") as fh:
                yield fh
        return
    if origin in (None, "-"):
        yield sys.stdin
        return
    try:
        fh = open(origin, encoding="utf-8", newline="")
    except OSError as exc:
        raise LogFormatError(f"cannot open input {origin}: {exc}") from exc
    with fh:
        yield fh
