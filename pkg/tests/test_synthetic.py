from __future__ import annotations

from conftest import corpus_analysis

from lola import synthetic
from lola.engine import run_trace


def test_deterministic_and_complete():
    cfg = synthetic.SyntheticConfig(events=700, seed=3)
    a, b = list(synthetic.generate(cfg)), list(synthetic.generate(cfg))
    assert a == b and len(a) == 700
    assert all(set(r) == set(synthetic.COLUMNS) for r in a)


def test_fifty_hertz_clock():
    recs = list(synthetic.generate(synthetic.SyntheticConfig(events=120)))
    for k, r in enumerate(recs):
        assert r["time_s"] == float(k // 50) and r["time_micros"] == float(k % 50 * 20000)


def test_short_traces_are_padded():
    assert len(list(synthetic.generate(synthetic.SyntheticConfig(events=30)))) == 30


def test_no_gps_jump_unless_injected():
    result = corpus_analysis("sensor_validation")
    clean = list(synthetic.generate(synthetic.SyntheticConfig(events=3000)))
    assert run_trace(result, clean, collect_values=False).feedback == []
    jumped = list(synthetic.generate(synthetic.SyntheticConfig(events=3000, gps_jumps=((1234, 25.0),))))
    assert [e.position for e in run_trace(result, jumped, collect_values=False).feedback] == [1234]


def test_covers_every_corpus_input(corpus_name):
    inputs = set(corpus_analysis(corpus_name).spec.input_names)
    assert inputs <= set(synthetic.COLUMNS)
