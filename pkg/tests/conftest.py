from __future__ import annotations

import functools

import pytest
from hypothesis import HealthCheck, settings

from lola import corpus, synthetic
from lola.analysis import analyze
from lola.parser import parse_specification

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

M_HEIGHT = """
input bool valid
input double height
output double m_height := if valid { max(m_height[-1, 0.0], height) } else { m_height[-1, 0.0] }
"""


@functools.lru_cache(maxsize=None)
def corpus_spec(name: str):
    return parse_specification(corpus.source(name), name)


@functools.lru_cache(maxsize=None)
def corpus_analysis(name: str):
    return analyze(corpus_spec(name))


@functools.lru_cache(maxsize=4)
def synthetic_records(events: int, seed: int = 0) -> tuple:
    return tuple(synthetic.generate(synthetic.SyntheticConfig(events=events, seed=seed)))


# criterion number -> (title, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")


@pytest.fixture(params=corpus.NAMES)
def corpus_name(request) -> str:
    return request.param
