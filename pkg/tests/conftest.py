import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402
from locfuse import generate_dataset, reference_scenario  # noqa: E402


@pytest.fixture(scope="session")
def scenario():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_dataset(scenario):
    return generate_dataset(scenario, 250, 7)


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
