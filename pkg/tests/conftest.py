import re

import pytest
from hypothesis import HealthCheck, settings

from impact_nash.core import GameSpec

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def symmetric_pair():
    return GameSpec.from_arrays(0.03, 0.2, [1.0, 1.0], [0.0, 0.0], alpha=0.01)


@pytest.fixture
def asymmetric_pair():
    return GameSpec.from_arrays(0.03, 0.2, [1.0, 2.0], [0.5, 0.7], alpha=0.01)


# One summary line per acceptance criterion, keyed on the ``test_criterion_<k>`` names.

_CRITERION = re.compile(r"test_criterion_(\d+)")
_outcomes: dict[int, bool] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None or "test_acceptance.py" not in report.nodeid:
        return
    k = int(m.group(1))
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        _outcomes[k] = _outcomes.get(k, True) and not failed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_outcomes):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if _outcomes[k] else 'FAIL'}")
