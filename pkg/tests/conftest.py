from __future__ import annotations

import pytest

# criterion number -> (label, outcome); filled from test reports
ACCEPTANCE: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            ACCEPTANCE.setdefault(m.args[0], [m.args[1], "not run"])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    entry = ACCEPTANCE.setdefault(m.args[0], [m.args[1], "not run"])
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry[1] = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        label, status = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {status:<7} {label}")
