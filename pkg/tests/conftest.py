from importlib import resources
from pathlib import Path

import pytest

from roster_forensics.roster import Schedule, Shift, load_chart, load_schedule


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("roster_forensics") / "fixtures" / name))


@pytest.fixture
def fixtures():
    return fixture_path


@pytest.fixture
def tiny_schedule():
    return load_schedule(fixture_path("shifts.csv"))


@pytest.fixture
def tiny_chart(tiny_schedule):
    return load_chart(fixture_path("tiny.csv"), "wide_csv", tiny_schedule)


def ten_shift_schedule(duty: dict[int, str]) -> Schedule:
    """Shifts s01..s10 of 720 minutes; ``duty`` maps 1-based index to nurse letters."""
    return Schedule(tuple(Shift(f"s{i:02d}", (i - 1) * 720, i * 720, frozenset(duty.get(i, "")))
                          for i in range(1, 11)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
