import pytest

_RESULTS: dict[int, tuple[str, list[str]]] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when not in ("setup", "call"):
        return
    number, text = mark.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    prev_text, outcomes = _RESULTS.setdefault(number, (text, []))
    if call.when == "call" or failed:
        outcomes.append("FAIL" if failed else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        text, outcomes = _RESULTS[number]
        verdict = "PASS" if outcomes and all(o == "PASS" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {text}")
