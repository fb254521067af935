import pytest

# criterion number -> (text, all phases passed so far)
_results: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args[0], marker.args[1]
    ok = _results.get(number, (text, True))[1]
    # a parametrized criterion passes only if every case passes; setup errors count too
    if rep.failed or (rep.when == "call" and rep.outcome != "passed"):
        ok = False
    _results[number] = (text, ok)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        text, ok = _results[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] AC{number}: {text}")
