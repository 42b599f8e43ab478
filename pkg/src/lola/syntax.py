"""AST node types and a pretty printer whose output reparses to the same tree.

Source locations are carried on every node but excluded from equality, so
``parse(format_spec(spec)) == spec`` holds structurally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

from lola.errors import Loc


class StreamType(enum.Enum):
    BOOL = "bool"
    INT = "int"
    DOUBLE = "double"
    STRING = "string"

    def __str__(self) -> str:
        return self.value


TYPE_NAMES = {t.value: t for t in StreamType}

KEYWORD_ATOMS = ("position", "int_min", "int_max", "double_min", "double_max")


def _loc() -> Loc | None:
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Lit:
    value: bool | int | float | str
    type: StreamType
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Keyword:
    name: str
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Access:
    """``stream[offset, default]``; a bare name is offset 0 with no default."""

    stream: str
    offset: int = 0
    default: Expr | None = None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class AbsAccess:
    """``stream#[index, default]``."""

    stream: str
    index: int
    default: Expr
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Expr, ...]
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class If:
    """``if c1 {e1} elif c2 {e2} ... else {e}``. Core form has one branch."""

    branches: tuple[tuple[Expr, Expr], ...]
    otherwise: Expr
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Switch:
    scrutinee: Expr
    cases: tuple[tuple[Lit, Expr], ...]
    default: Expr
    loc: Loc | None = _loc()


Expr = Union[Lit, Keyword, Access, AbsAccess, Call, Unary, Binary, If, Switch]


@dataclass(frozen=True)
class StreamDecl:
    name: str
    type: StreamType
    kind: str  # "input" | "output"
    definition: Expr | None = None
    is_const: bool = False
    loc: Loc | None = _loc()


ONLINE_KINDS = ("trigger", "trigger_once", "trigger_change", "snapshot")
OFFLINE_KINDS = ("tag", "filter")
FEEDBACK_KINDS = ONLINE_KINDS + OFFLINE_KINDS


@dataclass(frozen=True)
class FeedbackDecl:
    """One feedback declaration.

    ``condition`` is None only for a bare ``snapshot`` (dump every position).
    For ``tag``, ``sources[i]`` is written to column ``targets[i]``. A
    ``filter`` with empty ``sources`` copies every input stream.
    """

    kind: str
    condition: Expr | None
    message: str = ""
    sources: tuple[str, ...] = ()
    targets: tuple[str, ...] = ()
    location: str | None = None
    loc: Loc | None = _loc()


@dataclass(frozen=True)
class Specification:
    inputs: tuple[StreamDecl, ...] = ()
    outputs: tuple[StreamDecl, ...] = ()
    feedback: tuple[FeedbackDecl, ...] = ()

    @property
    def streams(self) -> tuple[StreamDecl, ...]:
        return self.inputs + self.outputs

    def stream(self, name: str) -> StreamDecl:
        for decl in self.streams:
            if decl.name == name:
                return decl
        raise KeyError(name)

    @property
    def input_names(self) -> list[str]:
        return [d.name for d in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [d.name for d in self.outputs]


def children(expr: Expr) -> list[Expr]:
    if isinstance(expr, (Lit, Keyword)):
        return []
    if isinstance(expr, Access):
        return [expr.default] if expr.default is not None else []
    if isinstance(expr, AbsAccess):
        return [expr.default]
    if isinstance(expr, Call):
        return list(expr.args)
    if isinstance(expr, Unary):
        return [expr.operand]
    if isinstance(expr, Binary):
        return [expr.left, expr.right]
    if isinstance(expr, If):
        out = []
        for cond, body in expr.branches:
            out += [cond, body]
        return out + [expr.otherwise]
    if isinstance(expr, Switch):
        return [expr.scrutinee] + [body for _, body in expr.cases] + [expr.default]
    raise TypeError(f"not an expression: {expr!r}")


def walk(expr: Expr):
    """Pre-order traversal."""
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


# --------------------------------------------------------------------------
# pretty printing

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def quote_string(s: str) -> str:
    return '"' + "".join(_ESCAPES.get(ch, ch) for ch in s) + '"'


def format_literal(lit: Lit) -> str:
    v = lit.value
    if lit.type is StreamType.BOOL:
        return "true" if v else "false"
    if lit.type is StreamType.STRING:
        return quote_string(v)
    if lit.type is StreamType.DOUBLE:
        text = repr(float(v))
        if text in ("inf", "-inf", "nan"):
            raise ValueError(f"double literal {text} has no source form")
        return text
    return str(v)


def format_expr(expr: Expr) -> str:
    """Fully parenthesised source text for ``expr``."""
    if isinstance(expr, Lit):
        return format_literal(expr)
    if isinstance(expr, Keyword):
        return expr.name
    if isinstance(expr, Access):
        if expr.offset == 0 and expr.default is None:
            return expr.stream
        return f"{expr.stream}[{expr.offset},{format_expr(expr.default)}]"
    if isinstance(expr, AbsAccess):
        return f"{expr.stream}#[{expr.index},{format_expr(expr.default)}]"
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, Unary):
        return f"({expr.op}{format_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({format_expr(expr.left)} {expr.op} {format_expr(expr.right)})"
    if isinstance(expr, If):
        parts = []
        for i, (cond, body) in enumerate(expr.branches):
            kw = "if" if i == 0 else "elif"
            parts.append(f"{kw} {format_expr(cond)} {{ {format_expr(body)} }}")
        parts.append(f"else {{ {format_expr(expr.otherwise)} }}")
        return "(" + " ".join(parts) + ")"
    if isinstance(expr, Switch):
        cases = " ".join(f"case {format_literal(c)} {{ {format_expr(b)} }}" for c, b in expr.cases)
        return (
            f"(switch {format_expr(expr.scrutinee)} {{ {cases} "
            f"default {{ {format_expr(expr.default)} }} }})"
        )
    raise TypeError(f"not an expression: {expr!r}")


def format_feedback(fb: FeedbackDecl) -> str:
    if fb.kind == "tag":
        return (
            f"tag as {', '.join(fb.targets)} if {format_expr(fb.condition)} "
            f"with {', '.join(fb.sources)} at {quote_string(fb.location)}"
        )
    if fb.kind == "filter":
        names = f"{', '.join(fb.sources)} " if fb.sources else ""
        return f"filter {names}if {format_expr(fb.condition)} at {quote_string(fb.location)}"
    text = fb.kind
    if fb.condition is not None:
        text += f" {format_expr(fb.condition)}"
    if fb.message:
        text += f" with {quote_string(fb.message)}"
    return text


def format_spec(spec: Specification) -> str:
    lines = [f"input {d.type} {d.name}" for d in spec.inputs]
    for d in spec.outputs:
        kw = "const" if d.is_const else "output"
        lines.append(f"{kw} {d.type} {d.name} := {format_expr(d.definition)}")
    lines += [format_feedback(fb) for fb in spec.feedback]
    return "\n".join(lines) + ("\n" if lines else "")
