"""Incremental evaluation of well-formed specifications.

Resolved values live in the *past array*: one ring buffer per stream,
allocated once, plus pinned slots for absolute accesses. Evaluations that
need a value not yet available are parked in the *future index*, keyed by
the awaited (stream, position); storing that value wakes exactly those
entries, which restart from the root of their expression.

Every stream equation is compiled once into a small Python function.
Buffer capacities come from a latency bound per stream: a value read at
offset ``w`` by a consumer that may itself resolve ``latency`` steps late
has to stay around for ``latency - w`` further steps, and the emission
cursor, which finalizes whole positions in order, may lag by the largest
latency in the specification.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from lola import stdlib
from lola.analysis import AnalysisResult, accesses, analyze, infer, widens_default
from lola.errors import EvaluationError, LogFormatError, SpecError
from lola.feedback import FeedbackEvent, FeedbackState, evaluate_feedback
from lola.logs import Event
from lola.syntax import (
    AbsAccess,
    Access,
    Binary,
    Call,
    Expr,
    If,
    Keyword,
    Lit,
    Specification,
    StreamType,
    Switch,
    Unary,
)

__all__ = ["Event", "Monitor", "StepOutput", "Suspended", "run_trace"]

SLOT_BYTES = 16  # value reference + position tag
INDEX_ENTRY_BYTES = 24
COUNTER_BYTES = 16


class Pending(Exception):
    """Evaluation needs ``(stream index, position)`` which is not resolved."""

    __slots__ = ("key",)

    def __init__(self, key: tuple[int, int]):
        self.key = key


@dataclass(frozen=True)
class Suspended:
    stream: str
    position: int


@dataclass
class StepOutput:
    resolved: list[tuple[int, str, object]] = field(default_factory=list)
    feedback: list[FeedbackEvent] = field(default_factory=list)

    def extend(self, other: StepOutput) -> None:
        self.resolved.extend(other.resolved)
        self.feedback.extend(other.feedback)


_EMPTY = object()


class Ring:
    """Fixed-capacity store addressed by trace position."""

    __slots__ = ("idx", "name", "cap", "vals", "poss", "pins", "pinned")

    def __init__(self, idx: int, name: str, cap: int, pins: Iterable[int] = ()):
        self.idx = idx
        self.name = name
        self.cap = cap
        self.vals: list[object] = [None] * cap
        self.poss: list[int] = [-1] * cap
        self.pins = frozenset(pins)
        self.pinned: dict[int, object] = {}

    def get(self, q: int):
        i = q % self.cap
        p = self.poss[i]
        if p == q:
            return self.vals[i]
        if p > q:
            raise RuntimeError(f"{self.name}@{q} was evicted from a ring of capacity {self.cap}")
        raise Pending((self.idx, q))

    def put(self, q: int, v: object) -> None:
        i = q % self.cap
        if self.poss[i] > q:
            raise RuntimeError(f"{self.name}@{q} resolved after its slot was reused")
        self.vals[i] = v
        self.poss[i] = q
        if q in self.pins:
            self.pinned[q] = v

    def pin(self, p: int):
        try:
            return self.pinned[p]
        except KeyError:
            raise Pending((self.idx, p)) from None

    def size(self) -> int:
        return SLOT_BYTES * (self.cap + len(self.pins))


class Unbounded:
    """Growable store used when lookahead is unbounded (offline only)."""

    __slots__ = ("idx", "name", "vals")

    def __init__(self, idx: int, name: str):
        self.idx = idx
        self.name = name
        self.vals: list[object] = []

    def get(self, q: int):
        vals = self.vals
        if q < len(vals):
            v = vals[q]
            if v is not _EMPTY:
                return v
        raise Pending((self.idx, q))

    def put(self, q: int, v: object) -> None:
        vals = self.vals
        if q >= len(vals):
            vals.extend([_EMPTY] * (q + 1 - len(vals)))
        vals[q] = v

    pin = get

    def size(self) -> int:
        return SLOT_BYTES * len(self.vals)


class _Clock:
    """Shared by compiled code: the newest input position and whether the
    trace has ended."""

    __slots__ = ("last", "done")

    def __init__(self) -> None:
        self.last = -1
        self.done = False


# --------------------------------------------------------------------------
# compilation


class _Compiler:
    def __init__(self, types: dict[str, StreamType], index: dict[str, int]):
        self.types = types
        self.index = index
        self.helpers: list[str] = []
        self.bindings: dict[str, object] = {}
        self.counter = 0
        self.divisions = 0

    def bind(self, prefix: str, obj: object) -> str:
        name = f"_{prefix}{self.counter}"
        self.counter += 1
        self.bindings[name] = obj
        return name

    def default(self, stream: str, default: Expr, sid: str) -> str:
        if widens_default(self.types[stream], default):
            value = default.operand.value if isinstance(default, Unary) else default.value
            return repr(float(-value if isinstance(default, Unary) else value))
        return self.expr(default, sid)

    def expr(self, e: Expr, sid: str) -> str:
        if isinstance(e, Lit):
            return repr(e.value)
        if isinstance(e, Keyword):
            return "j" if e.name == "position" else repr(stdlib.KEYWORD_VALUES[e.name])
        if isinstance(e, Access):
            t = self.index[e.stream]
            w = e.offset
            if w == 0:
                return f"g{t}(j)"
            d = self.default(e.stream, e.default, sid)
            if w < 0:
                return f"(g{t}(j - {-w}) if j >= {-w} else {d})"
            return f"(g{t}(j + {w}) if j + {w} <= C.last else ({d} if C.done else _pend({t}, j + {w})))"
        if isinstance(e, AbsAccess):
            t = self.index[e.stream]
            d = self.default(e.stream, e.default, sid)
            p = e.index
            return f"(p{t}({p}) if {p} <= C.last else ({d} if C.done else _pend({t}, {p})))"
        if isinstance(e, Unary):
            x = self.expr(e.operand, sid)
            if e.op == "!":
                return f"(not {x})"
            if infer(e.operand, self.types) is StreamType.INT:
                return f"_ineg({x})"
            return f"(-{x})"
        if isinstance(e, Binary):
            x = self.expr(e.left, sid)
            y = self.expr(e.right, sid)
            op = e.op
            if op == "&":
                return f"({x} and {y})"
            if op == "|":
                return f"({x} or {y})"
            if op in ("=", "!=", "<", "<=", ">", ">="):
                return f"({x} {'==' if op == '=' else op} {y})"
            if infer(e.left, self.types) is StreamType.INT:
                if op == "/":
                    self.divisions += 1
                    return f"_idiv({x}, {y}, {sid!r}, j)"
                return f"{ {'+': '_iadd', '-': '_isub', '*': '_imul'}[op] }({x}, {y})"
            if op == "/":
                return f"_fdiv({x}, {y})"
            if op == "^":
                return f"_fpow({x}, {y})"
            return f"({x} {op} {y})"
        if isinstance(e, If):
            (cond, then), = e.branches
            return f"({self.expr(then, sid)} if {self.expr(cond, sid)} else {self.expr(e.otherwise, sid)})"
        if isinstance(e, Switch):
            name = f"_sw{self.counter}"
            self.counter += 1
            lines = [f"def {name}(s, j):"]
            for const, body in e.cases:
                c = repr(const.value)
                lines.append(f"    if s == {c}: return {self.expr(body, sid)}")
                # labels ascend, so no later case can match
                lines.append(f"    if s < {c}: return {self.expr(e.default, sid)}")
            lines.append(f"    return {self.expr(e.default, sid)}")
            self.helpers.append("\n".join(lines))
            return f"{name}({self.expr(e.scrutinee, sid)}, j)"
        if isinstance(e, Call):
            arg_types = tuple(infer(a, self.types) for a in e.args)
            builtin = stdlib.resolve(e.name, arg_types)
            if builtin is None:
                raise SpecError(f"unknown function {e.name}", e.loc)
            fn = self.bind("b", builtin.impl)
            return f"{fn}({', '.join(self.expr(a, sid) for a in e.args)})"
        raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------


class Monitor:
    """Evaluation state for one specification.

    ``unbounded=None`` picks ring buffers for efficiently monitorable
    specifications and growable stores otherwise; ``unbounded=False``
    refuses specifications without bounded lookahead (online mode).
    ``order`` overrides the output evaluation order and must respect every
    zero-offset dependency.
    """

    def __init__(
        self,
        spec: Specification | AnalysisResult,
        *,
        unbounded: bool | None = None,
        order: Sequence[str] | None = None,
        collect_values: bool = True,
    ):
        result = spec if isinstance(spec, AnalysisResult) else analyze(spec)
        if not result.well_formed:
            raise SpecError(f"specification is not well-formed: {result.well_formed.reason}")
        em = bool(result.efficiently_monitorable)
        if unbounded is None:
            unbounded = not em
        elif not unbounded and not em:
            raise SpecError(
                "specification is not efficiently monitorable "
                f"({result.efficiently_monitorable.reason}); it needs unbounded lookahead"
            )
        self.analysis = result
        self.spec = result.spec
        self.unbounded = unbounded
        self.collect_values = collect_values
        spec = self.spec

        self.inputs = spec.input_names
        self.outputs = spec.output_names
        self.feedback = list(spec.feedback)
        fb_names = [f"<{fb.kind}#{i}>" for i, fb in enumerate(self.feedback)]
        self.names = self.inputs + self.outputs + fb_names
        self.index = {n: i for i, n in enumerate(self.names)}
        n_in = len(self.inputs)

        if order is None:
            order = result.evaluation_order
        self._check_order(order)
        fb_ids = [len(self.inputs) + len(self.outputs) + i for i, fb in enumerate(self.feedback) if fb.condition is not None]
        self.order = [self.index[o] for o in order] + fb_ids

        self.stores = self._allocate(result)
        self.clock = _Clock()
        self.diag: list[tuple[str, int, str]] = []
        self.fns = self._compile(result)

        self.future: dict[tuple[int, int], list[tuple[int, int]]] = {}
        self.n_suspended = 0
        self.pending: dict[int, int] = {}
        self.diag_at: dict[int, list[tuple[str, int, str]]] = {}
        self.emit_next = 0
        self.fb_state = FeedbackState.initial(len(self.feedback))
        self.cond_ids = [
            len(self.inputs) + len(self.outputs) + i if fb.condition is not None else None
            for i, fb in enumerate(self.feedback)
        ]
        self.out_ids = list(range(n_in, n_in + len(self.outputs)))
        numeric_time = result.type_table.get("time") in (StreamType.INT, StreamType.DOUBLE)
        self.time_id = self.index.get("time") if numeric_time else None
        self.snapshot_streams = self.inputs + self.outputs
        self.time_first: float | None = None
        self.time_last: float | None = None
        self._fixed_size = sum(s.size() for s in self.stores) + COUNTER_BYTES * len(self.feedback)
        self.peak_state_size = self.state_size()

    # -- setup -------------------------------------------------------------

    def _check_order(self, order: Sequence[str]) -> None:
        if sorted(order) != sorted(self.outputs):
            raise ValueError("evaluation order must list every output exactly once")
        rank = {n: i for i, n in enumerate(order)}
        for e in self.analysis.graph.edges:
            if not e.absolute and e.weight == 0 and e.dst in rank and rank[e.dst] > rank[e.src]:
                raise ValueError(f"evaluation order puts {e.src} before {e.dst}, which it reads at offset 0")

    def _allocate(self, result: AnalysisResult) -> list:
        if self.unbounded:
            return [Unbounded(i, n) for i, n in enumerate(self.names)]
        lat = dict(result.latency)
        edges = list(result.graph.edges)
        for i, fb in enumerate(self.feedback):
            name = self.names[len(self.inputs) + len(self.outputs) + i]
            lat[name] = result.feedback_latency[i]
            if fb.condition is not None:
                edges += accesses(fb.condition, name)
        emit_lag = max(lat.values(), default=0)
        cap = {n: emit_lag + 1 for n in self.names}
        pins: dict[str, set[int]] = {n: set() for n in self.names}
        for e in edges:
            if e.absolute:
                pins[e.dst].add(e.weight)
            else:
                cap[e.dst] = max(cap[e.dst], lat[e.src] - e.weight + 1)
        self.capacity = cap
        return [Ring(i, n, cap[n], pins[n]) for i, n in enumerate(self.names)]

    def _compile(self, result: AnalysisResult) -> list:
        comp = _Compiler(result.type_table, self.index)
        bodies = []
        exprs = [d.definition for d in self.spec.outputs] + [fb.condition for fb in self.feedback]
        base = len(self.inputs)
        for k, expr in enumerate(exprs):
            if expr is None:
                continue
            sid = self.names[base + k]
            bodies.append(f"def _f{base + k}(j):\n    return {comp.expr(expr, sid)}")
        source = "\n\n".join(comp.helpers + bodies) + "\n"
        ns = self._namespace_for(comp)
        self.source = source
        self._max_diagnostics = comp.divisions
        exec(compile(source, "<lola-monitor>", "exec"), ns)
        return [ns.get(f"_f{i}") for i in range(len(self.names))]

    def _int_div(self, a: int, b: int, stream: str, j: int) -> int:
        try:
            return stdlib.int_div(a, b)
        except stdlib.IntDivisionByZero:
            self.diag.append((stream, j, f"integer division by zero in {stream}"))
            return 0

    # -- evaluation --------------------------------------------------------

    @property
    def position(self) -> int:
        """Position the next event must carry."""
        return self.clock.last + 1

    def _attempt(self, sid: int, j: int, fresh: bool, work: deque) -> None:
        diag = self.diag
        mark = len(diag)
        try:
            v = self.fns[sid](j)
        except Pending as p:
            del diag[mark:]
            self.future.setdefault(p.key, []).append((sid, j))
            self.n_suspended += 1
            if fresh:
                self.pending[j] = self.pending.get(j, 0) + 1
            return
        if len(diag) > mark:
            self.diag_at.setdefault(j, []).extend(diag[mark:])
            del diag[mark:]
        if not fresh:
            left = self.pending[j] - 1
            if left:
                self.pending[j] = left
            else:
                del self.pending[j]
        self.stores[sid].put(j, v)
        if self.future:
            waiters = self.future.pop((sid, j), None)
            if waiters:
                self.n_suspended -= len(waiters)
                work.extend(waiters)

    def _drain(self, work: deque) -> None:
        while work:
            sid, j = work.popleft()
            self._attempt(sid, j, False, work)

    def step(self, event: Event | dict) -> StepOutput:
        """Feed the next event and return everything finalized by it."""
        clock = self.clock
        if clock.done:
            raise RuntimeError("monitor already finalized")
        k = clock.last + 1
        if isinstance(event, Event):
            if event.position != k:
                raise ValueError(f"expected event at position {k}, got {event.position}")
            values = event.values
        else:
            values = event
        clock.last = k
        work: deque = deque()
        stores = self.stores
        for i, name in enumerate(self.inputs):
            try:
                v = values[name]
            except KeyError:
                raise LogFormatError(f"event {k} has no value for input {name!r}") from None
            stores[i].put(k, v)
            if self.future:
                waiters = self.future.pop((i, k), None)
                if waiters:
                    self.n_suspended -= len(waiters)
                    work.extend(waiters)
        self._drain(work)
        for sid in self.order:
            self._attempt(sid, k, True, work)
            if work:
                self._drain(work)
        out = self._emit(k)
        size = self.state_size()
        if size > self.peak_state_size:
            self.peak_state_size = size
        return out

    def finalize(self) -> StepOutput:
        """Declare the end of the trace: out-of-range accesses take their
        defaults, every suspended evaluation resolves, remaining positions
        are emitted."""
        clock = self.clock
        if clock.done:
            return StepOutput()
        clock.done = True
        work: deque = deque()
        for key in [key for key in self.future if key[1] > clock.last]:
            waiters = self.future.pop(key)
            self.n_suspended -= len(waiters)
            work.extend(waiters)
        self._drain(work)
        if self.future:
            raise EvaluationError(f"unresolvable evaluations remain: {sorted(self.future)[:5]}")
        return self._emit(clock.last)

    def _emit(self, upto: int) -> StepOutput:
        out = StepOutput()
        pending = self.pending
        e = self.emit_next
        while e <= upto and e not in pending:
            self._emit_position(e, out)
            e += 1
        self.emit_next = e
        return out

    def _emit_position(self, e: int, out: StepOutput) -> None:
        stores = self.stores
        if self.collect_values:
            names = self.names
            out.resolved.extend((e, names[i], stores[i].get(e)) for i in self.out_ids)
        if self.time_id is not None:
            ts = stores[self.time_id].get(e)
            if self.time_first is None:
                self.time_first = ts
            self.time_last = ts
        else:
            ts = None
        diags = self.diag_at.pop(e, None)
        if diags:
            out.feedback.extend(FeedbackEvent("error", e, msg) for _, _, msg in diags)
        if not self.feedback:
            return
        conds = [stores[c].get(e) if c is not None else None for c in self.cond_ids]
        index = self.index
        out.feedback.extend(
            evaluate_feedback(
                self.feedback,
                conds,
                e,
                lambda name: stores[index[name]].get(e),
                self.fb_state,
                self.snapshot_streams,
                ts,
            )
        )

    # -- inspection --------------------------------------------------------

    @property
    def emitted(self) -> int:
        """Number of positions finalized so far."""
        return self.emit_next

    def average_frequency(self) -> float | None:
        """Mean input rate in Hz from the ``time`` stream of the emitted
        positions; None without such a stream or with < 2 positions."""
        n = self.emit_next
        if self.time_first is None or n < 2 or self.time_last == self.time_first:
            return None
        return (n - 1) / (self.time_last - self.time_first)

    def state_size(self) -> int:
        """Bytes of engine-managed storage: buffer slots, pinned slots, future
        index entries and bookkeeping. String payloads are counted as
        references."""
        size = self._fixed_size if not self.unbounded else sum(s.size() for s in self.stores)
        return (
            size
            + INDEX_ENTRY_BYTES * self.n_suspended
            + COUNTER_BYTES * len(self.pending)
            + COUNTER_BYTES * sum(len(v) for v in self.diag_at.values())
        )

    def state_bound(self) -> int | None:
        """Upper bound on :meth:`state_size` for bounded monitors: a stream
        with latency ``l`` has at most ``l`` unresolved positions, and at
        most ``L + 1`` positions await emission. None in unbounded mode."""
        if self.unbounded:
            return None
        result = self.analysis
        lat = [result.latency[n] for n in self.inputs + self.outputs] + list(result.feedback_latency)
        lag = max(lat, default=0)
        return (
            self._fixed_size
            + INDEX_ENTRY_BYTES * sum(lat)
            + COUNTER_BYTES * lag
            + COUNTER_BYTES * (lag + 1) * self._max_diagnostics
        )

    def value(self, stream: str, position: int):
        """Resolved value of ``stream`` at ``position`` if still buffered,
        else :class:`Suspended`."""
        try:
            return self.stores[self.index[stream]].get(position)
        except Pending:
            return Suspended(stream, position)

    def eval_expression(self, expr: Expr, position: int):
        """Evaluate an ad-hoc core expression at ``position`` against the
        current state; returns the value or :class:`Suspended`."""
        comp = _Compiler(self.analysis.type_table, self.index)
        code = comp.expr(expr, "<expr>")
        ns = self._namespace_for(comp)
        exec("\n".join(comp.helpers) + f"\ndef _e(j):\n    return {code}\n", ns)
        mark = len(self.diag)
        try:
            return ns["_e"](position)
        except Pending as p:
            return Suspended(self.names[p.key[0]], p.key[1])
        finally:
            del self.diag[mark:]

    def _namespace_for(self, comp: _Compiler) -> dict:
        ns = {
            "C": self.clock,
            "_pend": _pend,
            "_ineg": stdlib.int_neg,
            "_iadd": stdlib.int_add,
            "_isub": stdlib.int_sub,
            "_imul": stdlib.int_mul,
            "_fdiv": stdlib.float_div,
            "_fpow": stdlib.float_pow,
            "_idiv": self._int_div,
            **comp.bindings,
        }
        for s in self.stores:
            ns[f"g{s.idx}"] = s.get
            ns[f"p{s.idx}"] = s.pin
        return ns


def _pend(t: int, q: int):
    raise Pending((t, q))


def init_monitor(spec: Specification, analysis: AnalysisResult | None = None, **kw) -> Monitor:
    return Monitor(analysis if analysis is not None else spec, **kw)


def run_trace(spec: Specification | AnalysisResult, events: Iterable[Event | dict], **kw) -> StepOutput:
    """Evaluate a whole trace and collect every step's output."""
    mon = Monitor(spec, **kw)
    out = StepOutput()
    for ev in events:
        out.extend(mon.step(ev))
    out.extend(mon.finalize())
    return out
