import warnings
from pathlib import Path

import pytest
from hypothesis import settings

from pbchron.data import load_hp1c, load_simulated, split_supported

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

ORACLES = Path(__file__).parent / "oracles"


@pytest.fixture(scope="session")
def hp1c():
    return load_hp1c()


@pytest.fixture(scope="session")
def simulated():
    return load_simulated()


@pytest.fixture(scope="session")
def simulated_split(simulated):
    return split_supported(simulated, 3)


@pytest.fixture
def no_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        yield


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
