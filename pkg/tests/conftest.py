import pytest
from hypothesis import settings

from hndaf.engine import Simulator
from hndaf.protocol import ModelCatalog

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

MB = 1_000_000


@pytest.fixture
def catalog():
    cat = ModelCatalog()
    for _ in range(10):
        cat.new_type()
    return cat


@pytest.fixture
def sim():
    return Simulator()


def kinds(sim, kind):
    """Log lines of one message kind, as split columns."""
    return [line.split("|") for line in sim.log_lines if line.split("|")[3] == kind]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
