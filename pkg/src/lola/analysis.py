"""Static analysis: typing, the dependency graph, well-formedness, the
efficiently monitorable fragment, buffer sizing and evaluation order."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from lola import stdlib
from lola.errors import SpecError, TypeCheckError
from lola.parser import check_names, desugar, is_core
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
    walk,
)

B, I, D, S = StreamType.BOOL, StreamType.INT, StreamType.DOUBLE, StreamType.STRING
NUMERIC = (I, D)
ARITHMETIC = ("+", "-", "*", "/")
ORDERING = ("<", "<=", ">", ">=")


# --------------------------------------------------------------------------
# typing


def _where(expr: Expr) -> str:
    return f" at {expr.loc}" if getattr(expr, "loc", None) else ""


def is_int_literal(expr: Expr) -> bool:
    if isinstance(expr, Unary) and expr.op == "-":
        expr = expr.operand
    return isinstance(expr, Lit) and expr.type is I


def widens_default(stream_type: StreamType, default: Expr) -> bool:
    """An int literal used as the default of a double stream is read as a
    double (``dev_sum[-1,0]``)."""
    return stream_type is D and is_int_literal(default)


def infer(expr: Expr, types: dict[str, StreamType]) -> StreamType:
    """Type of ``expr`` given stream types; raises :class:`TypeCheckError`."""
    if isinstance(expr, Lit):
        return expr.type
    if isinstance(expr, Keyword):
        return stdlib.KEYWORD_TYPES[expr.name]
    if isinstance(expr, (Access, AbsAccess)):
        if expr.stream not in types:
            raise SpecError(f"reference to undeclared stream {expr.stream!r}", expr.loc)
        t = types[expr.stream]
        if expr.default is not None:
            dt = infer(expr.default, types)
            if dt is not t and not widens_default(t, expr.default):
                raise TypeCheckError(
                    f"default of {expr.stream!r} has type {dt}{_where(expr.default)} "
                    f"but the stream has type {t}{_where(expr)}",
                    expr.loc,
                )
        return t
    if isinstance(expr, Unary):
        t = infer(expr.operand, types)
        if expr.op == "!" and t is B:
            return B
        if expr.op == "-" and t in NUMERIC:
            return t
        raise TypeCheckError(f"operator {expr.op!r} cannot be applied to {t}{_where(expr.operand)}", expr.loc)
    if isinstance(expr, Binary):
        lt = infer(expr.left, types)
        rt = infer(expr.right, types)
        op = expr.op
        detail = f"{lt}{_where(expr.left)} and {rt}{_where(expr.right)}"
        if op in ("&", "|"):
            if lt is B and rt is B:
                return B
            raise TypeCheckError(f"operands of {op!r} must be bool, found {detail}", expr.loc)
        if lt is not rt:
            raise TypeCheckError(f"operands of {op!r} have mismatched types {detail}", expr.loc)
        if op in ("=", "!="):
            return B
        if op in ORDERING:
            if lt in NUMERIC:
                return B
            raise TypeCheckError(f"{op!r} needs numeric operands, found {detail}", expr.loc)
        if op == "^":
            if lt is D:
                return D
            raise TypeCheckError(f"'^' is defined on double only, found {detail}", expr.loc)
        if op in ARITHMETIC and lt in NUMERIC:
            return lt
        raise TypeCheckError(f"operator {op!r} cannot be applied to {detail}", expr.loc)
    if isinstance(expr, If):
        result = None
        for cond, body in expr.branches:
            ct = infer(cond, types)
            if ct is not B:
                raise TypeCheckError(f"condition has type {ct}, expected bool{_where(cond)}", cond.loc)
            bt = infer(body, types)
            if result is None:
                result, first = bt, body
            elif bt is not result:
                raise TypeCheckError(
                    f"branches have types {result}{_where(first)} and {bt}{_where(body)}", expr.loc
                )
        ot = infer(expr.otherwise, types)
        if ot is not result:
            raise TypeCheckError(
                f"branches have types {result}{_where(first)} and {ot}{_where(expr.otherwise)}", expr.loc
            )
        return result
    if isinstance(expr, Switch):
        st = infer(expr.scrutinee, types)
        result = infer(expr.default, types)
        for const, body in expr.cases:
            if const.type is not st:
                raise TypeCheckError(
                    f"case label has type {const.type}{_where(const)} but the scrutinee has type "
                    f"{st}{_where(expr.scrutinee)}",
                    const.loc,
                )
            bt = infer(body, types)
            if bt is not result:
                raise TypeCheckError(
                    f"case body has type {bt}{_where(body)} but default has type {result}{_where(expr.default)}",
                    body.loc,
                )
        return result
    if isinstance(expr, Call):
        arg_types = tuple(infer(a, types) for a in expr.args)
        overloads = stdlib.provide_builtins().get(expr.name)
        if not overloads:
            raise TypeCheckError(f"unknown function {expr.name!r}", expr.loc)
        found = stdlib.resolve(expr.name, arg_types)
        if found is not None:
            return found.result
        arities = sorted({len(o.params) for o in overloads})
        if len(arg_types) not in arities:
            raise TypeCheckError(
                f"{expr.name} takes {' or '.join(map(str, arities))} argument(s), got {len(arg_types)}", expr.loc
            )
        sigs = "; ".join(f"({', '.join(map(str, o.params))})" for o in overloads)
        got = ", ".join(map(str, arg_types))
        raise TypeCheckError(f"no overload of {expr.name} accepts ({got}); candidates: {sigs}", expr.loc)
    raise TypeError(f"not an expression: {expr!r}")


def type_check(spec: Specification) -> dict[str, StreamType]:
    """Check a core specification; returns the stream type table."""
    check_names(spec)
    types = {d.name: d.type for d in spec.streams}
    for d in spec.outputs:
        t = infer(d.definition, types)
        if t is not d.type:
            raise TypeCheckError(
                f"{d.name!r} is declared {d.type}{_where(d)} but its definition has type {t}"
                f"{_where(d.definition)}",
                d.loc,
            )
    for fb in spec.feedback:
        if fb.condition is not None:
            t = infer(fb.condition, types)
            if t is not B:
                raise TypeCheckError(f"{fb.kind} condition has type {t}, expected bool", fb.condition.loc)
    return types


# --------------------------------------------------------------------------
# dependency graph


@dataclass(frozen=True)
class Edge:
    """``src`` reads ``dst`` at relative offset ``weight``; for an absolute
    access ``weight`` is the pinned trace index."""

    src: str
    dst: str
    weight: int
    absolute: bool = False


@dataclass
class DependencyGraph:
    vertices: list[str]
    edges: list[Edge]

    @property
    def relative_edges(self) -> list[Edge]:
        return [e for e in self.edges if not e.absolute]

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e.src == v]


def accesses(expr: Expr, src: str) -> list[Edge]:
    out = []
    for node in walk(expr):
        if isinstance(node, Access):
            out.append(Edge(src, node.stream, node.offset))
        elif isinstance(node, AbsAccess):
            out.append(Edge(src, node.stream, node.index, absolute=True))
    return out


def build_dependency_graph(spec: Specification) -> DependencyGraph:
    """One edge per syntactic access, including accesses in branches that
    may never be taken and in default expressions."""
    edges = []
    for d in spec.outputs:
        edges.extend(accesses(d.definition, d.name))
    return DependencyGraph([d.name for d in spec.streams], edges)


def strongly_connected_components(vertices: list[str], edges: list[Edge]) -> list[list[str]]:
    succ: dict[str, list[str]] = {v: [] for v in vertices}
    for e in edges:
        succ[e.src].append(e.dst)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in vertices:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work.pop()
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            for j in range(i, len(succ[v])):
                w = succ[v][j]
                if w not in index:
                    work.append((v, j + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def _pred_cycle(pred: dict[str, Edge]) -> list[Edge] | None:
    state: dict[str, int] = {}
    for root in pred:
        walk_ = []
        v = root
        while v in pred and v not in state:
            state[v] = 1
            walk_.append(v)
            v = pred[v].src
        if state.get(v) == 1 and v in walk_:
            cycle = []
            u = v
            while True:
                e = pred[u]
                cycle.append(e)
                u = e.src
                if u == v:
                    break
            return list(reversed(cycle))
        for u in walk_:
            state[u] = 2
    return None


def _find_cycle_with_sign(vertices: list[str], edges: list[Edge], sign: int) -> list[Edge] | None:
    """A cycle with ``sign * weight > 0`` if one exists.

    Bellman-Ford on the sign-adjusted longest-path problem. Once relaxation
    outlives |V| rounds, distances grow without bound, so the predecessor
    graph eventually contains a cycle, and such a cycle is always positive.
    """
    dist = {v: 0 for v in vertices}
    pred: dict[str, Edge] = {}
    rounds = 0
    while True:
        changed = False
        for e in edges:
            cand = dist[e.src] + sign * e.weight
            if cand > dist[e.dst]:
                dist[e.dst] = cand
                pred[e.dst] = e
                changed = True
        rounds += 1
        if not changed:
            return None
        if rounds >= len(vertices):
            cycle = _pred_cycle(pred)
            if cycle is not None:
                return cycle


def _tight_cycle(vertices: list[str], edges: list[Edge], sign: int) -> list[Edge] | None:
    """Assuming no cycle with ``sign * weight > 0``, find a zero-weight cycle
    among edges that are tight for the longest-path potentials."""
    dist = {v: 0 for v in vertices}
    for _ in range(len(vertices)):
        changed = False
        for e in edges:
            cand = dist[e.src] + sign * e.weight
            if cand > dist[e.dst]:
                dist[e.dst] = cand
                changed = True
        if not changed:
            break
    tight: dict[str, list[Edge]] = {v: [] for v in vertices}
    for e in edges:
        if dist[e.src] + sign * e.weight == dist[e.dst]:
            tight[e.src].append(e)
    color = {v: 0 for v in vertices}
    path: list[Edge] = []

    def dfs(v: str) -> list[Edge] | None:
        color[v] = 1
        for e in tight[v]:
            if color[e.dst] == 1:
                start = next((i for i, p in enumerate(path) if p.src == e.dst), len(path))
                return path[start:] + [e]
            if color[e.dst] == 0:
                path.append(e)
                found = dfs(e.dst)
                if found:
                    return found
                path.pop()
        color[v] = 2
        return None

    for v in vertices:
        if color[v] == 0:
            found = dfs(v)
            if found:
                return found
    return None


@dataclass
class Verdict:
    ok: bool
    witness: list[Edge] = field(default_factory=list)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def format_cycle(cycle: list[Edge]) -> str:
    if not cycle:
        return ""
    parts = [cycle[0].src]
    for e in cycle:
        parts.append(f"-[{e.weight:+d}]-> {e.dst}")
    return " ".join(parts) + f"  (total {sum(e.weight for e in cycle):+d})"


def _sccs_with_edges(g: DependencyGraph) -> list[tuple[list[str], list[Edge]]]:
    rel = g.relative_edges
    out = []
    for comp in strongly_connected_components(g.vertices, rel):
        members = set(comp)
        inner = [e for e in rel if e.src in members and e.dst in members]
        if inner:
            out.append((comp, inner))
    return out


def _absolute_cycle(g: DependencyGraph) -> list[Edge] | None:
    """A dependency cycle through an absolute access ``s -> t#[p]``.

    Every position of ``s`` reads ``t`` at ``p``, so there is a cycle iff
    ``t@p`` transitively reads ``s`` at some position >= 0. Searched over
    (stream, position) states; accesses below position 0 take their default
    and end the walk. Positions are capped by a bound on how far a walk that
    stays non-negative has to climb.
    """
    absolute = [e for e in g.edges if e.absolute]
    if not absolute:
        return None
    succ: dict[str, list[Edge]] = {v: [] for v in g.vertices}
    for e in g.edges:
        succ[e.src].append(e)
    n = len(g.vertices)
    w_max = max((abs(e.weight) for e in g.edges if not e.absolute), default=0)
    cap = max(e.weight for e in absolute) + (n * n + 1) * w_max
    for start in absolute:
        origin = (start.dst, start.weight)
        parent: dict[tuple[str, int], tuple[tuple[str, int], Edge] | None] = {origin: None}
        queue = deque([origin])
        while queue:
            state = queue.popleft()
            v, q = state
            if v == start.src:
                path = []
                while parent[state] is not None:
                    state, edge = parent[state]
                    path.append(edge)
                return [start] + path[::-1]
            for e in succ[v]:
                nq = e.weight if e.absolute else q + e.weight
                nxt = (e.dst, nq)
                if 0 <= nq <= cap and nxt not in parent:
                    parent[nxt] = (state, e)
                    queue.append(nxt)
    return None


def check_well_formed(g: DependencyGraph) -> Verdict:
    """No closed walk of total weight zero over relative-offset edges, and
    no cycle through an absolute access at its pinned position.

    Within one strongly connected component, a positive and a negative cycle
    can always be combined into a zero-weight closed walk, so such a
    component is rejected as well; otherwise a zero cycle must consist of
    edges that are tight for longest (or shortest) path potentials.
    """
    for comp, inner in _sccs_with_edges(g):
        pos = _find_cycle_with_sign(comp, inner, +1)
        neg = _find_cycle_with_sign(comp, inner, -1)
        if pos and neg:
            return Verdict(
                False,
                pos + neg,
                "positive cycle " + format_cycle(pos) + " and negative cycle " + format_cycle(neg)
                + " share a component and combine into a zero-weight closed walk",
            )
        zero = _tight_cycle(comp, inner, +1 if not pos else -1)
        if zero:
            return Verdict(False, zero, "zero-weight cycle " + format_cycle(zero))
    cycle = _absolute_cycle(g)
    if cycle:
        return Verdict(
            False, cycle, f"cycle through absolute access {cycle[0].src} -> {cycle[0].dst}#[{cycle[0].weight}]: "
            + format_cycle(cycle)
        )
    return Verdict(True)


def classify_efficiently_monitorable(g: DependencyGraph) -> Verdict:
    """No positive-weight cycle, i.e. bounded lookahead."""
    for comp, inner in _sccs_with_edges(g):
        pos = _find_cycle_with_sign(comp, inner, +1)
        if pos:
            return Verdict(False, pos, "positive-weight cycle " + format_cycle(pos))
    return Verdict(True)


@dataclass(frozen=True)
class BufferBound:
    past_depth: int = 0
    future_depth: int = 0
    pinned: tuple[int, ...] = ()


def compute_memory_bounds(g: DependencyGraph) -> dict[str, BufferBound]:
    past = {v: 0 for v in g.vertices}
    future = {v: 0 for v in g.vertices}
    pinned: dict[str, set[int]] = {v: set() for v in g.vertices}
    for e in g.edges:
        if e.absolute:
            pinned[e.dst].add(e.weight)
        elif e.weight < 0:
            past[e.dst] = max(past[e.dst], -e.weight)
        else:
            future[e.dst] = max(future[e.dst], e.weight)
    return {v: BufferBound(past[v], future[v], tuple(sorted(pinned[v]))) for v in g.vertices}


def compute_evaluation_order(g: DependencyGraph, outputs: list[str]) -> list[str]:
    """Topological order of ``outputs`` along zero-offset edges; ties go to
    declaration order."""
    rank = {name: i for i, name in enumerate(outputs)}
    deps: dict[str, set[str]] = {o: set() for o in outputs}
    users: dict[str, set[str]] = {o: set() for o in outputs}
    for e in g.edges:
        if not e.absolute and e.weight == 0 and e.src in rank and e.dst in rank:
            deps[e.src].add(e.dst)
            users[e.dst].add(e.src)
    heap = [rank[o] for o in outputs if not deps[o]]
    heapq.heapify(heap)
    order = []
    while heap:
        name = outputs[heapq.heappop(heap)]
        order.append(name)
        for user in users[name]:
            deps[user].discard(name)
            if not deps[user]:
                heapq.heappush(heap, rank[user])
    if len(order) != len(outputs):
        stuck = [o for o in outputs if o not in order]
        raise SpecError(f"no evaluation order: zero-offset cycle among {', '.join(stuck)}")
    return order


def compute_latency(g: DependencyGraph, inputs: list[str]) -> dict[str, int] | None:
    """Worst-case number of steps between the arrival of position j and the
    resolution of each stream at j; None when unbounded (positive cycle).

    An access to ``t`` at offset ``w`` waits for ``t`` at ``j + w``, which
    itself needs up to ``latency(t)`` more steps. Absolute accesses count
    with their index as offset (the worst case is j = 0).
    """
    lat = {v: 0 for v in g.vertices}
    input_set = set(inputs)
    for _ in range(len(g.vertices) + 1):
        changed = False
        for e in g.edges:
            if e.src in input_set:
                continue
            cand = e.weight + lat[e.dst]
            if cand > lat[e.src]:
                lat[e.src] = cand
                changed = True
        if not changed:
            return lat
    return None


# --------------------------------------------------------------------------


@dataclass
class AnalysisResult:
    spec: Specification  # core form
    type_table: dict[str, StreamType]
    graph: DependencyGraph
    well_formed: Verdict
    efficiently_monitorable: Verdict
    buffer_bounds: dict[str, BufferBound]
    evaluation_order: list[str]
    latency: dict[str, int] | None
    feedback_latency: list[int] | None


def analyze(spec: Specification) -> AnalysisResult:
    """Desugar (if needed), type-check and analyse ``spec``."""
    if not is_core(spec):
        spec = desugar(spec)
    types = type_check(spec)
    g = build_dependency_graph(spec)
    wf = check_well_formed(g)
    em = classify_efficiently_monitorable(g) if wf else Verdict(False, reason="not well-formed")
    order = compute_evaluation_order(g, spec.output_names) if wf else []
    latency = compute_latency(g, spec.input_names) if wf and em else None
    fb_latency = None
    if latency is not None:
        fb_latency = []
        for fb in spec.feedback:
            edges = accesses(fb.condition, "<feedback>") if fb.condition is not None else []
            fb_latency.append(max([0] + [e.weight + latency[e.dst] for e in edges]))
    return AnalysisResult(
        spec, types, g, wf, em, compute_memory_bounds(g), order, latency, fb_latency
    )
