import os

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))

_criteria: list[tuple[str, str, list[str]]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None or report.when != "call" and not (report.when == "setup" and not report.passed):
        return
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    details = [v for k, v in report.user_properties if k == "check"]
    _criteria.append((crit, status, details))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, status, details in _criteria:
        tr.write_line(f"{status} {name}")
        for d in details:
            tr.write_line(f"    {d}")
