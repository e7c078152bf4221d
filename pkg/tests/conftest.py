"""Shared fixtures and the acceptance summary printed after the run."""

from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.fixture
def digitized_path() -> Path:
    return FIXTURES / "digitized_6units.geom"


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    entry = _criteria.setdefault(number, {"title": "", "outcome": "passed", "detail": ""})
    props = dict(report.user_properties)
    entry["title"] = props.get("title", entry["title"])
    notes = [v for k, v in report.user_properties if k == "detail"]
    if notes and report.when == "call":
        entry["detail"] = "; ".join(filter(None, [entry["detail"], *notes]))
    if report.failed:
        entry["outcome"] = "failed"
    elif report.skipped and entry["outcome"] == "passed" and report.when == "setup":
        entry["outcome"] = "skipped"


@pytest.fixture(autouse=True)
def _criterion_properties(request):
    mark = request.node.get_closest_marker("criterion")
    if mark is not None:
        number, title = mark.args
        request.node.user_properties.append(("criterion", number))
        request.node.user_properties.append(("title", title))


@pytest.fixture
def detail(request):
    """Call with a string to attach measured values to the acceptance line."""

    def record(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[e["outcome"]]
        line = f"[{status}] {number:2d}. {e['title']}"
        if e["detail"]:
            line += f"  ({e['detail']})"
        terminalreporter.write_line(line)
