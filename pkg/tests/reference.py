"""Brute-force reference semantics used as a test oracle.

Evaluates the surface syntax directly (no desugaring, no dependency
analysis, no buffers): every value is computed on demand by memoized
recursion over the complete trace. Only the primitive operations of
``lola.stdlib`` are shared with the engine.
"""

from __future__ import annotations

import math

from lola import stdlib
from lola.errors import EvaluationError
from lola.syntax import AbsAccess, Access, Binary, Call, If, Keyword, Lit, Specification, StreamType, Switch, Unary


class CyclicDefinition(Exception):
    pass


class Reference:
    def __init__(self, spec: Specification, trace: list[dict]):
        self.spec = spec
        self.trace = trace
        self.n = len(trace)
        self.defs = {d.name: d for d in spec.outputs}
        self.types = {d.name: d.type for d in spec.streams}
        self.memo: dict[tuple[str, int], object] = {}
        self.busy: set[tuple[str, int]] = set()
        self.div_errors: list[tuple[int, str]] = []

    def val(self, name: str, j: int):
        if name not in self.defs:
            return self.trace[j][name]
        key = (name, j)
        if key in self.memo:
            return self.memo[key]
        if key in self.busy:
            raise CyclicDefinition(key)
        self.busy.add(key)
        try:
            v = self.ev(self.defs[name].definition, j, name)
        finally:
            self.busy.discard(key)
        if self.types[name] is StreamType.DOUBLE and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        self.memo[key] = v
        return v

    def ev(self, e, j: int, owner: str):
        if isinstance(e, Lit):
            return e.value
        if isinstance(e, Keyword):
            return stdlib.keyword_value(e.name, j)
        if isinstance(e, Access):
            q = j + e.offset
            if 0 <= q < self.n:
                return self.val(e.stream, q)
            return self._default(e.stream, e.default, j, owner)
        if isinstance(e, AbsAccess):
            if e.index < self.n:
                return self.val(e.stream, e.index)
            return self._default(e.stream, e.default, j, owner)
        if isinstance(e, Unary):
            x = self.ev(e.operand, j, owner)
            if e.op == "!":
                return not x
            return stdlib.int_neg(x) if type(x) is int else -x
        if isinstance(e, Binary):
            return self._binary(e, j, owner)
        if isinstance(e, If):
            for cond, then in e.branches:
                if self.ev(cond, j, owner):
                    return self.ev(then, j, owner)
            return self.ev(e.otherwise, j, owner)
        if isinstance(e, Switch):
            s = self.ev(e.scrutinee, j, owner)
            for label, body in e.cases:
                if s == label.value:
                    return self.ev(body, j, owner)
            return self.ev(e.default, j, owner)
        if isinstance(e, Call):
            if e.name == "ite":
                c, a, b = e.args
                return self.ev(a, j, owner) if self.ev(c, j, owner) else self.ev(b, j, owner)
            args = [self.ev(a, j, owner) for a in e.args]
            return _call(e.name, args)
        raise TypeError(e)

    def _default(self, stream, d, j, owner):
        v = self.ev(d, j, owner)
        if self.types[stream] is StreamType.DOUBLE and type(v) is int:
            return float(v)
        return v

    def _binary(self, e: Binary, j: int, owner: str):
        op = e.op
        if op == "&":
            return self.ev(e.left, j, owner) and self.ev(e.right, j, owner)
        if op == "|":
            return self.ev(e.left, j, owner) or self.ev(e.right, j, owner)
        a = self.ev(e.left, j, owner)
        b = self.ev(e.right, j, owner)
        if op == "=":
            return a == b
        if op == "!=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if type(a) is int:
            if op == "/":
                if b == 0:
                    self.div_errors.append((j, owner))
                    return 0
                q = abs(a) // abs(b)
                return stdlib.check_int(q if (a < 0) == (b < 0) else -q)
            return stdlib.check_int({"+": a + b, "-": a - b, "*": a * b}[op])
        if op == "/":
            return stdlib.float_div(a, b)
        if op == "^":
            return stdlib.float_pow(a, b)
        return {"+": a + b, "-": a - b, "*": a * b}[op]

    def outputs(self) -> list[tuple[int, str, object]]:
        """Every output value in (position, declaration) order."""
        return [(j, d.name, self.val(d.name, j)) for j in range(self.n) for d in self.spec.outputs]

    def condition(self, fb, j: int):
        if fb.condition is None:
            return None
        return self.ev(fb.condition, j, "<feedback>")

    def feedback(self) -> list[tuple[int, int]]:
        """(position, declaration index) of every firing."""
        fired = []
        once = set()
        for j in range(self.n):
            for i, fb in enumerate(self.spec.feedback):
                c = self.condition(fb, j)
                if fb.kind in ("trigger", "tag", "filter"):
                    hit = c is True
                elif fb.kind == "trigger_once":
                    hit = c is True and i not in once
                    if hit:
                        once.add(i)
                elif fb.kind == "trigger_change":
                    hit = j > 0 and c != self.condition(fb, j - 1)
                else:  # snapshot
                    hit = c is None or c is True
                if hit:
                    fired.append((j, i))
        return fired


def _call(name: str, args: list):
    if name in ("min", "max"):
        a, b = args
        if type(a) is float and (math.isnan(a) or math.isnan(b)):
            return math.nan
        return (a if a <= b else b) if name == "min" else (a if a >= b else b)
    if name == "abs":
        (a,) = args
        return stdlib.check_int(abs(a)) if type(a) is int else abs(a)
    if name == "int":
        return stdlib.to_int(args[0])
    if name == "double":
        return float(args[0])
    if name == "difference":
        return abs(args[0] - args[1])
    if name == "concat":
        return args[0] + args[1]
    if name == "atan2":
        return math.atan2(*args)
    fn = {"sqrt": stdlib.sqrt, "sin": stdlib.sin, "cos": stdlib.cos, "tan": stdlib.tan,
          "exp": stdlib.exp, "log": stdlib.log}[name]
    return fn(args[0])


def reference_run(spec: Specification, trace: list[dict]):
    """Outputs, feedback firings and division diagnostics, or the
    EvaluationError raised while computing them."""
    ref = Reference(spec, trace)
    try:
        values = ref.outputs()
        fired = ref.feedback()
    except EvaluationError as exc:
        return exc
    return values, fired, sorted(set(ref.div_errors))
