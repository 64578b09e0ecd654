import sys
from collections import defaultdict
from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "vibronic" / "data"
sys.path.insert(0, str(Path(__file__).resolve().parent))

_criteria = {}
_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("acceptance")
        if mark is not None:
            number, title = mark.args
            _criteria[number] = title


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[report.nodeid].append(report.outcome)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        item.config._acceptance_ids = getattr(item.config, "_acceptance_ids", {})
        item.config._acceptance_ids[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter, config):
    ids = getattr(config, "_acceptance_ids", {})
    if not ids:
        return
    by_number = defaultdict(list)
    for nodeid, number in ids.items():
        by_number[number].extend(_outcomes.get(nodeid, ["not run"]))
    terminalreporter.section("acceptance criteria")
    for number in sorted(by_number):
        results = by_number[number]
        ok = bool(results) and all(r == "passed" for r in results)
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {_criteria[number]}")


@pytest.fixture
def data_dir():
    return DATA
