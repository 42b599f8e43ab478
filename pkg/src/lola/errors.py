"""Exception hierarchy shared by every stage of the monitor."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Loc:
    """1-based line/column of a token or node in specification text."""

    line: int
    col: int
    source: str = "<spec>"

    def __str__(self) -> str:
        return f"{self.source}:{self.line}:{self.col}"


class LolaError(Exception):
    """Base class. ``exit_code`` follows the CLI contract."""

    exit_code = 1

    def __init__(self, message: str, loc: Loc | None = None):
        self.message = message
        self.loc = loc
        super().__init__(f"{loc}: {message}" if loc else message)


class LexError(LolaError):
    pass


class ParseError(LolaError):
    def __init__(self, message: str, loc: Loc | None = None, expected: frozenset[str] = frozenset()):
        self.expected = expected
        if expected:
            message = f"{message} (expected one of: {', '.join(sorted(expected))})"
        super().__init__(message, loc)


class SpecError(LolaError):
    """Semantic problem: duplicate/undeclared names, merge conflicts, bad feedback."""


class TypeCheckError(LolaError):
    pass


class EvaluationError(LolaError):
    """Runtime failure inside the monitor (int overflow, invalid cast)."""

    exit_code = 3


class LogFormatError(LolaError):
    exit_code = 2

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
