import pytest

# criterion number -> [title, all tests passed so far]
_ACCEPTANCE = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None or rep.when != "call" and not rep.failed:
        return
    n, title = m.args
    entry = _ACCEPTANCE.setdefault(n, [title, True])
    if rep.failed:
        entry[1] = False


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
