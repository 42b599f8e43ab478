from __future__ import annotations

import io
import math
from pathlib import Path

import pytest
from conftest import synthetic_records
from hypothesis import given
from hypothesis import strategies as st

from lola import corpus
from lola.engine import Monitor, run_trace
from lola.errors import SpecError
from lola.feedback import (
    FeedbackEvent,
    FeedbackRouter,
    FeedbackState,
    SinkError,
    TagSink,
    append_tag_row,
    evaluate_feedback,
    format_notification,
)
from lola.logs import read_log
from lola.parser import desugar, parse_specification
from lola.syntax import FeedbackDecl

BOOL_SPEC = """
input bool c
input int k
trigger_once c with "once"
trigger_change c with "change"
trigger c with "every"
filter if c at "rows.csv"
"""


def fired(decls, conds):
    state = FeedbackState.initial(len(decls))
    out = []
    for j, c in enumerate(conds):
        out += evaluate_feedback(decls, [c] * len(decls), j, lambda n: None, state)
    return [e.position for e in out]


def decl(kind):
    return FeedbackDecl(kind, None, "m")


def test_trigger_once_fires_at_first_true_only():
    assert fired([decl("trigger_once")], [False, True, True, False, True]) == [1]


def test_trigger_change_fires_on_changes_after_start():
    assert fired([decl("trigger_change")], [False, False, True, True, False]) == [2, 4]
    assert fired([decl("trigger_change")], [True, True]) == []


def test_trigger_fires_every_time():
    assert fired([decl("trigger")], [True, False, True]) == [0, 2]


def test_snapshot_payload_and_gating():
    spec = parse_specification("input int a\noutput int b := a * 2\nsnapshot b > 2 with \"snap\"\nsnapshot")
    out = run_trace(spec, [{"a": 1}, {"a": 2}])
    gated = [e for e in out.feedback if e.decl == 0]
    plain = [e for e in out.feedback if e.decl == 1]
    assert [e.position for e in gated] == [1]
    assert gated[0].payload == (("a", 2), ("b", 4))
    assert [e.position for e in plain] == [0, 1]


def test_notification_format():
    ev = FeedbackEvent("snapshot", 3, 'say "hi"', 0.06, (("x", 1.5), ("s", "a b"), ("ok", True)))
    assert format_notification(ev) == 'position=3 time=0.06 kind=snapshot msg="say \\"hi\\"" x=1.5 s="a b" ok=true'
    assert format_notification(FeedbackEvent("trigger", 0, "m")) == 'position=0 kind=trigger msg="m"'


def test_timestamp_comes_from_time_stream():
    spec = parse_specification("input double time\ntrigger time > 0.01")
    out = run_trace(spec, [{"time": 0.0}, {"time": 0.02}])
    assert [(e.position, e.timestamp) for e in out.feedback] == [(1, 0.02)]


def route(spec_src: str, trace, out_dir: Path):
    spec = parse_specification(spec_src)
    mon = Monitor(spec, collect_values=False)
    text = io.StringIO()
    router = FeedbackRouter(mon.feedback, text, io.StringIO(), out_dir)
    for ev in trace:
        router.route(mon.step(ev).feedback)
    router.route(mon.finalize().feedback)
    router.close()
    return router, text.getvalue()


def test_filter_row_count(tmp_path):
    trace = [{"c": k % 14 == 3, "k": k} for k in range(100)]
    router, _ = route(BOOL_SPEC, trace, tmp_path)
    lines = (tmp_path / "rows.csv").read_text().splitlines()
    assert lines[0] == "c,k" and len(lines) == 1 + 7
    assert router.fire_counts == [1, 14, 7, 7]


def test_filter_output_is_a_valid_log(tmp_path):
    trace = [{"c": k % 3 == 0, "k": k} for k in range(30)]
    route(BOOL_SPEC, trace, tmp_path)
    spec = parse_specification(BOOL_SPEC)
    rows = list(read_log(tmp_path / "rows.csv", spec.inputs))
    assert [r.values for r in rows] == [t for t in trace if t["c"]]


def test_tag_rows_only_at_jumps(tmp_path):
    spec_src = corpus.source("sensor_validation") + '\ntag as t, v if detected_jump with time, velocity at "jumps.csv"\n'
    records = [dict(r) for r in synthetic_records(400)]
    for r in records[250:]:
        r["lat"] += 0.001  # ~111 m north from position 250 on
    route(spec_src, records, tmp_path)
    rows = (tmp_path / "jumps.csv").read_text().splitlines()
    assert rows[0] == "t,v"
    # independent scan: haversine step distance against velocity * dt
    expected = []
    def t(r):
        return r["time_s"] + r["time_micros"] / 1e6

    for j in range(1, len(records)):
        a, b = records[j - 1], records[j]
        d = _haversine(a["lat"], a["lon"], b["lat"], b["lon"])
        speed = math.sqrt(b["ug"] ** 2 + b["vg"] ** 2 + b["wg"] ** 2)
        if d - speed * (t(b) - t(a)) > 1.0:
            expected.append(t(b))
    assert [float(r.split(",")[0]) for r in rows[1:]] == pytest.approx(expected)
    assert len(expected) == 1


def _haversine(lat1, lon1, lat2, lon2, r=6373000.0, pi=3.1415926535):
    p1, p2 = lat1 * pi / 180, lat2 * pi / 180
    dp, dl = p2 - p1, (lon2 - lon1) * pi / 180
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return r * 2 * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def test_sink_header_written_once(tmp_path):
    sink = TagSink(tmp_path / "x" / "o.csv", ["a", "b"])
    append_tag_row(sink, [1, "q"])
    append_tag_row(sink, [2.5, 'say "x"'])
    sink.close()
    assert (tmp_path / "x" / "o.csv").read_text() == 'a,b\n1,"q"\n2.5,"say ""x"""\n'
    assert sink.rows == 2


def test_unwritable_sink(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(SinkError) as info:
        TagSink(blocker / "o.csv", ["a"])
    assert info.value.exit_code == 2


def test_duplicate_tag_locations_are_refused(tmp_path):
    spec = desugar(
        parse_specification('input int a\nfilter if a > 0 at "o.csv"\ntag as b if a < 0 with a at "./o.csv"')
    )
    with pytest.raises(SpecError, match="same file"):
        FeedbackRouter(spec.feedback, io.StringIO(), io.StringIO(), tmp_path)


def test_router_counts_match_events(tmp_path):
    trace = [{"c": k in (2, 3, 9), "k": k} for k in range(12)]
    router, text = route(BOOL_SPEC, trace, tmp_path)
    notifications = text.splitlines()
    assert router.fire_counts[0] == sum('msg="once"' in n for n in notifications) == 1
    assert router.fire_counts[1] == sum('msg="change"' in n for n in notifications) == 4
    assert router.fire_counts[2] == sum('msg="every"' in n for n in notifications) == 3


# -- properties --------------------------------------------------------------

BOOLS = st.lists(st.booleans(), max_size=60)


def _counts(seq, tmp_path):
    router, _ = route(BOOL_SPEC, [{"c": c, "k": i} for i, c in enumerate(seq)], tmp_path)
    return router.fire_counts


@given(BOOLS)
def test_trigger_once_fires_at_most_once(seq):
    out = run_trace(parse_specification(BOOL_SPEC), [{"c": c, "k": 0} for c in seq])
    once = [e.position for e in out.feedback if e.decl == 0]
    assert once == ([seq.index(True)] if True in seq else [])


@given(BOOLS)
def test_trigger_change_counts_adjacent_differences(seq):
    out = run_trace(parse_specification(BOOL_SPEC), [{"c": c, "k": 0} for c in seq])
    changes = [e.position for e in out.feedback if e.decl == 1]
    assert changes == [j for j in range(1, len(seq)) if seq[j] != seq[j - 1]]
    assert 0 not in changes


@given(BOOLS, st.integers(0, 60))
def test_latching_survives_split_sessions(seq, cut):
    spec = parse_specification(BOOL_SPEC)
    mon = Monitor(spec)
    events = []
    for c in seq[:cut]:
        events += mon.step({"c": c, "k": 0}).feedback
    # second session continues with the same monitor state
    for c in seq[cut:]:
        events += mon.step({"c": c, "k": 0}).feedback
    events += mon.finalize().feedback
    whole = run_trace(spec, [{"c": c, "k": 0} for c in seq]).feedback
    assert events == whole
    assert sum(e.decl == 0 for e in events) in (0, 1)


def test_filter_twice_is_idempotent(tmp_path):
    trace = [{"c": k % 4 == 1, "k": k} for k in range(40)]
    first = tmp_path / "one"
    route(BOOL_SPEC, trace, first)
    spec = parse_specification(BOOL_SPEC)
    again = [e.values for e in read_log(first / "rows.csv", spec.inputs)]
    second = tmp_path / "two"
    route(BOOL_SPEC, again, second)
    assert (second / "rows.csv").read_bytes() == (first / "rows.csv").read_bytes()
