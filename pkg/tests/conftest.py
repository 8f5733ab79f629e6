import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_ACCEPTANCE: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    failed = rep.failed or (rep.when == "call" and rep.outcome != "passed")
    if rep.when == "call" or failed:
        _ACCEPTANCE.setdefault(mark.args[0], []).append("" if not failed else item.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        bad = [name for name in _ACCEPTANCE[n] if name]
        line = f"criterion {n}: {'FAIL' if bad else 'PASS'}"
        if bad:
            line += " (" + ", ".join(sorted(set(bad))) + ")"
        terminalreporter.write_line(line)
