from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]

# (criterion number, title, passed, detail), filled by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[int, str, bool, str]] = []


def pytest_addoption(parser):
    parser.addoption("--promise-dir", default=str(ROOT / "data" / "promise"),
                     help="directory holding the PROMISE release CSVs")
    parser.addoption("--public-report", default=str(ROOT / "out" / "public"),
                     help="output directory of `defectval run --config data/public.json`")


@pytest.fixture(scope="session")
def promise_dir(request) -> Path:
    return Path(request.config.getoption("--promise-dir"))


@pytest.fixture(scope="session")
def public_report_dir(request) -> Path:
    return Path(request.config.getoption("--public-report"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_LINES):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {title}" + (f": {detail}" if detail else ""))
