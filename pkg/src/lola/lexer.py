"""Tokenizer for specification text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from lola.errors import LexError, Loc

KEYWORDS = frozenset(
    """
    input output const if elif else switch case default
    trigger trigger_once trigger_change snapshot tag filter as with at
    position int_min int_max double_min double_max true false
    """.split()
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<double>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>")
  | (?P<op>:=|!=|<=|>=|[-+*/^=<>&|!()\[\]{}\#,])
    """,
    re.VERBOSE,
)

_STRING_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    """``kind`` is 'ident', 'int', 'double', 'string', 'eof', or the keyword /
    operator text itself."""

    kind: str
    text: str
    value: object
    loc: Loc
    start: int
    end: int

    def __repr__(self) -> str:
        return f"Token({self.kind!r}, {self.text!r})"


class _Cursor:
    def __init__(self, source: str, name: str):
        self.source = source
        self.name = name
        self.line_starts = [0]
        for i, ch in enumerate(source):
            if ch == "\n":
                self.line_starts.append(i + 1)

    def loc(self, offset: int) -> Loc:
        lo, hi = 0, len(self.line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return Loc(lo + 1, offset - self.line_starts[lo] + 1, self.name)


def _read_string(source: str, start: int, cur: _Cursor) -> tuple[str, int]:
    i = start + 1
    out = []
    while i < len(source):
        ch = source[i]
        if ch == '"':
            return "".join(out), i + 1
        if ch == "\n":
            break
        if ch == "\\":
            if i + 1 >= len(source) or source[i + 1] not in _STRING_ESCAPES:
                raise LexError("invalid escape sequence in string literal", cur.loc(i))
            out.append(_STRING_ESCAPES[source[i + 1]])
            i += 2
            continue
        out.append(ch)
        i += 1
    raise LexError("unterminated string literal", cur.loc(start))


def tokenize(source: str, name: str = "<spec>") -> list[Token]:
    """Split ``source`` into tokens, ending with an 'eof' token."""
    cur = _Cursor(source, name)
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", cur.loc(pos))
        kind = m.lastgroup
        text = m.group()
        if kind in ("ws", "comment"):
            pos = m.end()
            continue
        if kind == "string":
            value, end = _read_string(source, pos, cur)
            tokens.append(Token("string", source[pos:end], value, cur.loc(pos), pos, end))
            pos = end
            continue
        if kind == "int":
            tok = Token("int", text, int(text), cur.loc(pos), pos, m.end())
        elif kind == "double":
            tok = Token("double", text, float(text), cur.loc(pos), pos, m.end())
        elif kind == "ident":
            tok = Token(text if text in KEYWORDS else "ident", text, text, cur.loc(pos), pos, m.end())
        else:
            tok = Token(text, text, text, cur.loc(pos), pos, m.end())
        tokens.append(tok)
        pos = m.end()
    tokens.append(Token("eof", "", None, cur.loc(n), n, n))
    return tokens
