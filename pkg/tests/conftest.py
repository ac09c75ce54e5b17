import sys
from importlib.resources import files

import pytest

from hotopt.frontend import parse_source
from hotopt.interp import RunConfig, run

sys.set_int_max_str_digits(0)

FIXTURES = files("hotopt") / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def load(name: str, *defines):
    return parse_source(fixture_text(name), name, list(defines))


def run_c(source: str, seed: int = 42, **kw):
    tu = parse_source(source, "t.c")
    return run(tu, "main", RunConfig(seed=seed, **kw))


@pytest.fixture
def heap_small():
    return load("heap.c", "SMALL", "DEBUG")


@pytest.fixture
def fact_small():
    return load("fact.c", "SMALL", "DEBUG")


# -- acceptance summary ----------------------------------------------------------

_OUTCOMES: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _CRITERIA.get(report.nodeid)
    if marker is None:
        return
    n, title = marker
    prev = _OUTCOMES.get(n, (title, "PASS"))
    ok = report.outcome == "passed" and prev[1] == "PASS"
    _OUTCOMES[n] = (title, "PASS" if ok else "FAIL")


_CRITERIA: dict = {}
_NOTES: dict = {}


@pytest.fixture
def note(request):
    """Attach an informational line to this test's criterion in the summary."""
    m = request.node.get_closest_marker("criterion")
    return lambda text: _NOTES.setdefault(m.args[0], []).append(text)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA[item.nodeid] = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        title, verdict = _OUTCOMES[n]
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {title}")
        for text in _NOTES.get(n, ()):
            terminalreporter.write_line(f"              {text}")
