import json
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
sys.path.insert(0, str(TESTS))


@pytest.fixture
def labeled_dir():
    return FIXTURES / "labeled"


@pytest.fixture
def labels():
    return json.loads((FIXTURES / "labeled" / "labels.json").read_text())


@pytest.fixture
def small_project():
    return FIXTURES / "project_small"


@pytest.fixture
def miner_dir():
    return FIXTURES / "miner"


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
