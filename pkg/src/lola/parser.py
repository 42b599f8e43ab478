"""Recursive-descent parser, desugaring into the core language, and merging
of several specification files."""

from __future__ import annotations

import dataclasses
from typing import Callable, Sequence

from lola.errors import ParseError, SpecError
from lola.lexer import Token, tokenize
from lola.syntax import (
    KEYWORD_ATOMS,
    ONLINE_KINDS,
    TYPE_NAMES,
    AbsAccess,
    Access,
    Binary,
    Call,
    Expr,
    FeedbackDecl,
    If,
    Keyword,
    Lit,
    Specification,
    StreamDecl,
    StreamType,
    Switch,
    Unary,
    walk,
)

DECL_START = frozenset({"input", "output", "const", "tag", "filter", *ONLINE_KINDS})
COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, source: str, name: str):
        self.source = source
        self.tokens = tokenize(source, name)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def accept(self, kind: str) -> Token | None:
        if self.tok.kind == kind:
            return self.advance()
        return None

    def expect(self, *kinds: str) -> Token:
        if self.tok.kind in kinds:
            return self.advance()
        found = self.tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", self.tok.loc, frozenset(kinds))

    def error(self, message: str, expected: Sequence[str] = ()) -> ParseError:
        return ParseError(message, self.tok.loc, frozenset(expected))

    # -- declarations ------------------------------------------------------

    def specification(self) -> Specification:
        inputs: list[StreamDecl] = []
        outputs: list[StreamDecl] = []
        feedback: list[FeedbackDecl] = []
        while not self.at("eof"):
            kind = self.tok.kind
            if kind == "input":
                inputs.extend(self.input_decl())
            elif kind in ("output", "const"):
                outputs.append(self.output_decl())
            elif kind in ("tag", "filter") or kind in ONLINE_KINDS:
                feedback.append(self.feedback_decl())
            else:
                raise self.error(f"unexpected {self.tok.text!r} at top level", sorted(DECL_START))
        return Specification(tuple(inputs), tuple(outputs), tuple(feedback))

    def stream_type(self) -> StreamType:
        tok = self.tok
        if tok.kind == "ident" and tok.text in TYPE_NAMES:
            self.advance()
            return TYPE_NAMES[tok.text]
        raise self.error(f"expected a type, found {tok.text!r}", sorted(TYPE_NAMES))

    def input_decl(self) -> list[StreamDecl]:
        self.expect("input")
        type_ = self.stream_type()
        decls = []
        while True:
            name = self.expect("ident")
            decls.append(StreamDecl(name.text, type_, "input", loc=name.loc))
            if not self.accept(","):
                return decls

    def output_decl(self) -> StreamDecl:
        is_const = self.advance().kind == "const"
        type_ = self.stream_type()
        name = self.expect("ident")
        self.expect(":=")
        definition = self.expression()
        return StreamDecl(name.text, type_, "output", definition, is_const, name.loc)

    def name_list(self) -> tuple[str, ...]:
        names = [self.expect("ident").text]
        while self.accept(","):
            names.append(self.expect("ident").text)
        return tuple(names)

    def feedback_decl(self) -> FeedbackDecl:
        head = self.advance()
        if head.kind == "tag":
            self.expect("as")
            targets = self.name_list()
            self.expect("if")
            cond = self.expression()
            self.expect("with")
            sources = self.name_list()
            self.expect("at")
            location = self.expect("string").value
            if len(sources) != len(targets):
                raise ParseError(
                    f"tag has {len(targets)} target columns but {len(sources)} source streams", head.loc
                )
            if len(set(targets)) != len(targets):
                raise ParseError("tag target columns must be pairwise distinct", head.loc)
            return FeedbackDecl("tag", cond, "", sources, targets, location, head.loc)
        if head.kind == "filter":
            sources = () if self.at("if") else self.name_list()
            self.expect("if")
            cond = self.expression()
            self.expect("at")
            location = self.expect("string").value
            return FeedbackDecl("filter", cond, "", sources, sources, location, head.loc)

        # trigger family / snapshot
        cond = None
        cond_text = ""
        if not (self.at("eof", "with", "string") or self.tok.kind in DECL_START):
            start = self.tok.start
            cond = self.expression()
            cond_text = self.source[start : self.tokens[self.pos - 1].end]
        elif head.kind != "snapshot":
            raise self.error(f"{head.kind} requires a condition", ["expression"])
        if self.accept("with"):
            message = self.expect("string").value
        elif self.at("string"):
            message = self.advance().value
        else:
            message = " ".join(cond_text.split())
        return FeedbackDecl(head.kind, cond, message, loc=head.loc)

    # -- expressions (lowest precedence first) -----------------------------

    def expression(self) -> Expr:
        return self.disjunction()

    def _left_assoc(self, ops: Sequence[str], operand: Callable[[], Expr]) -> Expr:
        left = operand()
        while self.tok.kind in ops:
            op = self.advance()
            left = Binary(op.kind, left, operand(), op.loc)
        return left

    def disjunction(self) -> Expr:
        return self._left_assoc(("|",), self.conjunction)

    def conjunction(self) -> Expr:
        return self._left_assoc(("&",), self.comparison)

    def comparison(self) -> Expr:
        return self._left_assoc(COMPARISONS, self.additive)

    def additive(self) -> Expr:
        return self._left_assoc(("+", "-"), self.multiplicative)

    def multiplicative(self) -> Expr:
        return self._left_assoc(("*", "/"), self.power)

    def power(self) -> Expr:
        base = self.unary()
        if self.at("^"):
            op = self.advance()
            return Binary("^", base, self.power(), op.loc)
        return base

    def unary(self) -> Expr:
        if self.at("!", "-"):
            op = self.advance()
            return Unary(op.kind, self.unary(), op.loc)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.tok
        kind = tok.kind
        if kind == "int":
            self.advance()
            return Lit(tok.value, StreamType.INT, tok.loc)
        if kind == "double":
            self.advance()
            return Lit(tok.value, StreamType.DOUBLE, tok.loc)
        if kind == "string":
            self.advance()
            return Lit(tok.value, StreamType.STRING, tok.loc)
        if kind in ("true", "false"):
            self.advance()
            return Lit(kind == "true", StreamType.BOOL, tok.loc)
        if kind in KEYWORD_ATOMS:
            self.advance()
            return Keyword(kind, tok.loc)
        if kind == "(":
            self.advance()
            inner = self.expression()
            self.expect(")")
            return inner
        if kind == "if":
            return self.conditional()
        if kind == "switch":
            return self.switch()
        if kind == "ident":
            return self.name_expression()
        found = tok.text or "end of input"
        raise self.error(
            f"unexpected {found!r} in expression",
            ["identifier", "literal", "(", "if", "switch", *KEYWORD_ATOMS],
        )

    def name_expression(self) -> Expr:
        name = self.advance()
        if self.accept("("):
            args = []
            if not self.at(")"):
                args.append(self.expression())
                while self.accept(","):
                    args.append(self.expression())
            self.expect(")")
            return Call(name.text, tuple(args), name.loc)
        if self.accept("["):
            offset = self.signed_int()
            self.expect(",")
            default = self.expression()
            self.expect("]")
            if offset == 0:
                return Access(name.text, 0, None, name.loc)
            return Access(name.text, offset, default, name.loc)
        if self.accept("#"):
            self.expect("[")
            index = self.expect("int").value
            self.expect(",")
            default = self.expression()
            self.expect("]")
            return AbsAccess(name.text, index, default, name.loc)
        return Access(name.text, 0, None, name.loc)

    def signed_int(self) -> int:
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        return sign * self.expect("int").value

    def block(self) -> Expr:
        self.expect("{")
        body = self.expression()
        self.expect("}")
        return body

    def conditional(self) -> Expr:
        head = self.expect("if")
        branches = [(self.expression(), self.block())]
        while self.accept("elif"):
            branches.append((self.expression(), self.block()))
        self.expect("else")
        return If(tuple(branches), self.block(), head.loc)

    def case_constant(self) -> Lit:
        tok = self.tok
        negative = self.accept("-") is not None
        lit = self.tok
        if lit.kind == "int":
            self.advance()
            return Lit(-lit.value if negative else lit.value, StreamType.INT, tok.loc)
        if lit.kind == "double":
            self.advance()
            return Lit(-lit.value if negative else lit.value, StreamType.DOUBLE, tok.loc)
        if not negative and lit.kind == "string":
            self.advance()
            return Lit(lit.value, StreamType.STRING, tok.loc)
        if not negative and lit.kind in ("true", "false"):
            self.advance()
            return Lit(lit.kind == "true", StreamType.BOOL, tok.loc)
        raise self.error("expected a constant case label", ["int", "double", "string", "true", "false"])

    def switch(self) -> Expr:
        head = self.expect("switch")
        scrutinee = self.expression()
        self.expect("{")
        cases: list[tuple[Lit, Expr]] = []
        while self.at("case"):
            self.advance()
            const = self.case_constant()
            if cases:
                prev = cases[-1][0]
                if type(prev.value) is type(const.value) and not prev.value < const.value:
                    raise ParseError(
                        "switch case labels must be distinct and in increasing order "
                        f"({format_label(prev)} is followed by {format_label(const)})",
                        const.loc,
                    )
            cases.append((const, self.block()))
        self.expect("default")
        default = self.block()
        self.expect("}")
        return Switch(scrutinee, tuple(cases), default, head.loc)


def format_label(lit: Lit) -> str:
    return repr(lit.value)


def referenced_streams(expr: Expr) -> list[tuple[str, object]]:
    return [(n.stream, n.loc) for n in walk(expr) if isinstance(n, (Access, AbsAccess))]


def check_names(spec: Specification) -> None:
    """Reject duplicate declarations and references to undeclared streams."""
    seen: dict[str, StreamDecl] = {}
    for decl in spec.streams:
        if decl.name in seen:
            raise SpecError(f"stream {decl.name!r} declared twice (first at {seen[decl.name].loc})", decl.loc)
        seen[decl.name] = decl
    exprs: list[Expr] = [d.definition for d in spec.outputs]
    for fb in spec.feedback:
        if fb.condition is not None:
            exprs.append(fb.condition)
        for src in fb.sources:
            if src not in seen:
                raise SpecError(f"{fb.kind} refers to undeclared stream {src!r}", fb.loc)
    for expr in exprs:
        for name, loc in referenced_streams(expr):
            if name not in seen:
                raise SpecError(f"reference to undeclared stream {name!r}", loc)


def parse_specification(source: str, name: str = "<spec>", *, resolve: bool = True) -> Specification:
    """Parse specification text into a surface AST.

    With ``resolve`` (the default) the file must be self-contained; pass
    ``resolve=False`` for fragments that are merged with other files before
    name resolution.
    """
    spec = _Parser(source, name).specification()
    if resolve:
        check_names(spec)
    return spec


# --------------------------------------------------------------------------
# desugaring


def map_expr(expr: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Rebuild ``expr`` bottom-up, applying ``fn`` to every rebuilt node."""
    rec = lambda e: map_expr(e, fn)  # noqa: E731
    if isinstance(expr, Access) and expr.default is not None:
        expr = dataclasses.replace(expr, default=rec(expr.default))
    elif isinstance(expr, AbsAccess):
        expr = dataclasses.replace(expr, default=rec(expr.default))
    elif isinstance(expr, Call):
        expr = dataclasses.replace(expr, args=tuple(rec(a) for a in expr.args))
    elif isinstance(expr, Unary):
        expr = dataclasses.replace(expr, operand=rec(expr.operand))
    elif isinstance(expr, Binary):
        expr = dataclasses.replace(expr, left=rec(expr.left), right=rec(expr.right))
    elif isinstance(expr, If):
        expr = dataclasses.replace(
            expr,
            branches=tuple((rec(c), rec(b)) for c, b in expr.branches),
            otherwise=rec(expr.otherwise),
        )
    elif isinstance(expr, Switch):
        expr = dataclasses.replace(
            expr,
            scrutinee=rec(expr.scrutinee),
            cases=tuple((c, rec(b)) for c, b in expr.cases),
            default=rec(expr.default),
        )
    return fn(expr)


def _core(expr: Expr) -> Expr:
    if isinstance(expr, Call) and expr.name == "ite" and len(expr.args) == 3:
        cond, then, other = expr.args
        return If(((cond, then),), other, expr.loc)
    if isinstance(expr, If) and len(expr.branches) > 1:
        rest = If(expr.branches[1:], expr.otherwise, expr.branches[1][0].loc)
        return If((expr.branches[0],), _core(rest), expr.loc)
    return expr


def desugar_expr(expr: Expr) -> Expr:
    return map_expr(expr, _core)


def desugar(spec: Specification) -> Specification:
    """Rewrite abbreviations into core constructs.

    ``const`` becomes a plain output, ``ite`` and ``elif`` chains become
    nested if/else, and ``filter`` becomes a ``tag`` whose sources and
    targets coincide (all inputs when no streams are listed). ``switch``
    stays a core node.
    """
    outputs = tuple(
        dataclasses.replace(d, definition=desugar_expr(d.definition), is_const=False)
        for d in spec.outputs
    )
    feedback = []
    for fb in spec.feedback:
        cond = desugar_expr(fb.condition) if fb.condition is not None else None
        if fb.kind == "filter":
            names = fb.sources or tuple(spec.input_names)
            fb = dataclasses.replace(fb, kind="tag", sources=names, targets=names)
        feedback.append(dataclasses.replace(fb, condition=cond))
    return Specification(spec.inputs, outputs, tuple(feedback))


def is_core(spec: Specification) -> bool:
    exprs = [d.definition for d in spec.outputs] + [f.condition for f in spec.feedback if f.condition]
    for expr in exprs:
        for node in walk(expr):
            if isinstance(node, If) and len(node.branches) != 1:
                return False
            if isinstance(node, Call) and node.name == "ite":
                return False
    return not any(d.is_const for d in spec.outputs) and all(f.kind != "filter" for f in spec.feedback)


# --------------------------------------------------------------------------
# merging


def rename_streams(spec: Specification, mapping: dict[str, str]) -> Specification:
    def fn(node: Expr) -> Expr:
        if isinstance(node, (Access, AbsAccess)) and node.stream in mapping:
            return dataclasses.replace(node, stream=mapping[node.stream])
        return node

    def ren(e: Expr | None) -> Expr | None:
        return None if e is None else map_expr(e, fn)

    inputs = tuple(dataclasses.replace(d, name=mapping.get(d.name, d.name)) for d in spec.inputs)
    outputs = tuple(
        dataclasses.replace(d, name=mapping.get(d.name, d.name), definition=ren(d.definition))
        for d in spec.outputs
    )
    feedback = tuple(
        dataclasses.replace(
            f, condition=ren(f.condition), sources=tuple(mapping.get(s, s) for s in f.sources)
        )
        for f in spec.feedback
    )
    return Specification(inputs, outputs, feedback)


def _same(a: StreamDecl, b: StreamDecl) -> bool:
    return a.kind == b.kind and a.type == b.type and a.definition == b.definition


def merge_specifications(
    specs: Sequence[Specification],
    *,
    labels: Sequence[str] | None = None,
    qualify_conflicts: bool = False,
) -> Specification:
    """Combine several specifications into one.

    Identical declarations (same name, kind, type and definition) are
    unified. A conflicting redeclaration raises :class:`SpecError` unless
    ``qualify_conflicts`` is set, in which case the later file's output is
    renamed to ``<label>__<name>`` throughout that file.
    """
    if not specs:
        raise ValueError("merge_specifications needs at least one specification")
    if labels is None:
        labels = [f"spec{i}" for i in range(len(specs))]
    merged: dict[str, StreamDecl] = {}
    inputs: list[StreamDecl] = []
    outputs: list[StreamDecl] = []
    feedback: list[FeedbackDecl] = []
    for label, spec in zip(labels, specs):
        renames: dict[str, str] = {}
        while True:
            current = rename_streams(spec, renames) if renames else spec
            clashes = [
                d for d in current.streams if d.name in merged and not _same(merged[d.name], d)
            ]
            if not clashes:
                break
            for d in clashes:
                if not qualify_conflicts or d.kind == "input" or d.name in renames.values():
                    prev = merged[d.name]
                    raise SpecError(
                        f"conflicting declarations of {d.name!r} ({prev.kind} {prev.type} at {prev.loc} "
                        f"vs {d.kind} {d.type})",
                        d.loc,
                    )
                renames[d.name] = f"{label}__{d.name}"
        for d in current.streams:
            if d.name in merged:
                continue
            merged[d.name] = d
            (inputs if d.kind == "input" else outputs).append(d)
        feedback.extend(current.feedback)
    return Specification(tuple(inputs), tuple(outputs), tuple(feedback))
