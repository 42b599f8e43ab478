from __future__ import annotations

import pytest
from conftest import M_HEIGHT, corpus_analysis
from graph_oracles import has_positive_cycle, has_zero_closed_walk, simple_cycles
from hypothesis import given
from hypothesis import strategies as st

from lola.analysis import (
    DependencyGraph,
    Edge,
    analyze,
    build_dependency_graph,
    check_well_formed,
    classify_efficiently_monitorable,
    compute_evaluation_order,
    compute_latency,
    compute_memory_bounds,
    infer,
    strongly_connected_components,
    type_check,
)
from lola.errors import TypeCheckError
from lola.parser import desugar, parse_specification
from lola.syntax import StreamType

D, I, S, B = StreamType.DOUBLE, StreamType.INT, StreamType.STRING, StreamType.BOOL


def graph_of(src: str) -> DependencyGraph:
    return build_dependency_graph(desugar(parse_specification(src)))


def weights(g: DependencyGraph, src: str, dst: str) -> list[int]:
    return sorted(e.weight for e in g.edges if e.src == src and e.dst == dst and not e.absolute)


# -- typing ----------------------------------------------------------------


def test_no_implicit_coercion():
    with pytest.raises(TypeCheckError):
        type_check(parse_specification("output double x := 1 + 2.0"))


def test_listing_expressions_type():
    types = corpus_analysis("flight_phase").type_table
    assert types["freq_avg"] is D
    assert corpus_analysis("mission_state").type_table["state_trace"] is S


def test_concat_type():
    spec = parse_specification('input string s\noutput string t := concat(concat(t[-1,""]," -> "),s)')
    assert type_check(spec)["t"] is S


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("output double x := foo(1.0)", "unknown function"),
        ("output double x := sqrt(1.0, 2.0)", "argument"),
        ("output double x := sqrt(1)", "sqrt"),
        ("input int a\noutput int b := a[-1, 0.0]", "default"),
        ("input int a\ntrigger a + 1", "bool"),
        ("input int a\noutput bool b := a < 1.0", None),
        ("input bool a\noutput bool b := a < true", None),
        ("input int a\noutput double b := a ^ 2.0", None),
        ("input int a\noutput double b := a", None),
        ('input string a\noutput bool b := a & true', None),
    ],
)
def test_type_errors(src, fragment):
    with pytest.raises(TypeCheckError, match=fragment):
        type_check(parse_specification(src))


def test_type_error_mentions_both_locations():
    with pytest.raises(TypeCheckError) as info:
        type_check(parse_specification("input int a\ninput double b\noutput int c := a +\n   b"))
    msg = str(info.value)
    assert ":3:" in msg and ":4:" in msg


def test_int_literal_default_widens_for_double_stream():
    types = type_check(parse_specification("input double v\noutput double s := v + s[-1,0]"))
    assert types["s"] is D
    with pytest.raises(TypeCheckError):
        type_check(parse_specification("input double v\ninput int k\noutput double s := v + s[-1,k]"))


def test_keyword_types():
    types = {}
    assert infer(parse_specification("output int p := position").outputs[0].definition, types) is I
    assert infer(parse_specification("output double p := double_min").outputs[0].definition, types) is D


# -- dependency graph -------------------------------------------------------


def test_m_height_edges():
    g = graph_of(M_HEIGHT)
    assert weights(g, "m_height", "m_height") == [-1, -1]
    assert weights(g, "m_height", "valid") == [0]
    assert weights(g, "m_height", "height") == [0]
    assert set(g.vertices) == {"valid", "height", "m_height"}


def test_self_access_at_zero_is_self_loop():
    g = graph_of("output int a := a[0,0]")
    assert weights(g, "a", "a") == [0]


def test_frequency_reads_time_at_three_offsets():
    g = corpus_analysis("sensor_validation").graph
    # time appears twice at offset 0 (once per switch branch)
    assert sorted(set(weights(g, "frequency", "time"))) == [-1, 0, 1]
    assert weights(g, "frequency", "time") == [-1, 0, 0, 1]
    (pin,) = [e for e in g.edges if e.absolute]
    assert (pin.src, pin.dst, pin.weight) == ("flight_time", "time", 0)


# -- fragments ----------------------------------------------------------------


def test_zero_self_loop_is_ill_formed():
    v = check_well_formed(graph_of("output int a := a[0,0]"))
    assert not v and v.witness


def test_zero_two_cycle_is_ill_formed_with_witness():
    v = check_well_formed(graph_of("output int a := b[-1,0]\noutput int b := a[1,0]"))
    assert not v
    assert sum(e.weight for e in v.witness) == 0
    assert {e.src for e in v.witness} == {"a", "b"}


def test_positive_self_loop():
    g = graph_of("output int a := a[1,0]")
    assert check_well_formed(g)
    v = classify_efficiently_monitorable(g)
    assert not v and v.witness[0].weight == 1


def test_negative_self_loop():
    g = graph_of("output int a := a[-1,0]")
    assert check_well_formed(g) and classify_efficiently_monitorable(g)


def test_mixed_sign_component_has_zero_closed_walk():
    # a[1] then a[-1] returns to a at the same position
    g = graph_of("output int a := a[1,0] + a[-1,0]")
    assert has_zero_closed_walk(g)
    assert not check_well_formed(g)


@pytest.mark.parametrize(
    "src",
    [
        "output int x := x#[0, 0]",
        "output int x := y#[3, 0]\noutput int y := x[-1, 0] + 1",
        "input int i\noutput int x := x#[2, 0] + i",
    ],
)
def test_cycles_through_absolute_accesses_are_rejected(src):
    v = check_well_formed(graph_of(src))
    assert not v and v.witness[0].absolute


def test_absolute_access_to_the_past_of_its_reader_is_fine():
    # x@j reads y@0, which reads x@-1: out of range, so no cycle
    g = graph_of("output int x := y#[0, 0]\noutput int y := x[-1, 0]")
    assert check_well_formed(g)


def test_corpus_fragments(corpus_name):
    result = corpus_analysis(corpus_name)
    assert result.well_formed and result.efficiently_monitorable
    g = result.graph
    assert not has_zero_closed_walk(g) and not has_positive_cycle(g)
    # every cycle is strictly negative: self-references such as
    # freq_sum[-1] plus the reset loop velocity_max -> reset_max[-1] -> dif_max
    for cycle in simple_cycles(g):
        assert sum(e.weight for e in cycle) < 0


GRAPHS = st.integers(min_value=1, max_value=6).flatmap(
    lambda n: st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), st.integers(-2, 2)), max_size=9
    ).map(lambda es: DependencyGraph([f"v{i}" for i in range(n)], [Edge(f"v{a}", f"v{b}", w) for a, b, w in es]))
)


@given(GRAPHS)
def test_well_formed_matches_closed_walk_oracle(g):
    v = check_well_formed(g)
    assert bool(v) == (not has_zero_closed_walk(g))
    if not v:
        # the witness is a closed walk of weight zero or a pair of opposite cycles
        edges = set(g.edges)
        assert v.witness and all(e in edges for e in v.witness)


@given(GRAPHS)
def test_efficiently_monitorable_matches_cycle_enumeration(g):
    v = classify_efficiently_monitorable(g)
    assert bool(v) == (not has_positive_cycle(g))
    if not v:
        assert sum(e.weight for e in v.witness) > 0
        assert v.witness[0].src == v.witness[-1].dst


@given(GRAPHS)
def test_scc_partition(g):
    comps = strongly_connected_components(g.vertices, g.edges)
    assert sorted(v for c in comps for v in c) == sorted(g.vertices)


# -- planning -----------------------------------------------------------------


def test_m_height_buffer_bounds():
    bounds = compute_memory_bounds(graph_of(M_HEIGHT))
    assert (bounds["m_height"].past_depth, bounds["m_height"].future_depth) == (1, 0)
    assert bounds["valid"].past_depth == bounds["height"].past_depth == 0


def test_sensor_validation_time_bounds():
    b = corpus_analysis("sensor_validation").buffer_bounds["time"]
    assert (b.past_depth, b.future_depth, b.pinned) == (1, 1, (0,))


def test_past_depth_is_deepest_access():
    b = compute_memory_bounds(graph_of("input int x\noutput int y := x[-2,0] + x[-1,0]"))
    assert b["x"].past_depth == 2


def _respects_zero_edges(order, g):
    rank = {n: i for i, n in enumerate(order)}
    return all(
        rank[e.dst] < rank[e.src]
        for e in g.edges
        if not e.absolute and e.weight == 0 and e.src in rank and e.dst in rank
    )


def test_evaluation_orders_of_corpus(corpus_name):
    result = corpus_analysis(corpus_name)
    assert _respects_zero_edges(result.evaluation_order, result.graph)
    assert sorted(result.evaluation_order) == sorted(result.spec.output_names)


def test_sensor_validation_order():
    order = corpus_analysis("sensor_validation").evaluation_order
    pos = order.index
    assert pos("time") < min(pos("flight_time"), pos("frequency"), pos("passed_time"))
    assert pos("a") < pos("c") < pos("gps_distance")


def test_flight_phase_order():
    pos = corpus_analysis("flight_phase").evaluation_order.index
    assert pos("velocity") < min(pos("velocity_max"), pos("velocity_min"))
    assert pos("dif_max") < pos("reset_max")


def test_independent_streams_keep_declaration_order():
    g = graph_of("input int i\noutput int c := i\noutput int a := i\noutput int b := 3")
    assert compute_evaluation_order(g, ["c", "a", "b"]) == ["c", "a", "b"]


def test_chained_lookahead_latency():
    g = graph_of("input int c\noutput int b := c[1,0]\noutput int a := b[1,0] + c")
    lat = compute_latency(g, ["c"])
    assert lat == {"c": 0, "b": 1, "a": 2}


def test_latency_unbounded_for_positive_cycle():
    assert compute_latency(graph_of("output int a := a[1,0]"), []) is None


def test_analyze_reports_everything():
    r = analyze(parse_specification(M_HEIGHT))
    assert r.type_table == {"valid": B, "height": D, "m_height": D}
    assert r.evaluation_order == ["m_height"]
    assert r.latency == {"valid": 0, "height": 0, "m_height": 0}
