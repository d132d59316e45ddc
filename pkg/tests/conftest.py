"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_TITLES = {}
_OUTCOMES = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            num, title = m.args
            _TITLES[num] = title
            _OUTCOMES.setdefault(num, [])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _OUTCOMES[m.args[0]].append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _TITLES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_TITLES):
        results = _OUTCOMES.get(num, [])
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {status:7s} {_TITLES[num]}")
