import pathlib
import sys

import pytest

from lossdispatch import Bus, Generator, Line, Network, QuadraticCost
from lossdispatch.matpower import load_network

HERE = pathlib.Path(__file__).parent
FIXTURES = HERE / "fixtures"
sys.path.insert(0, str(HERE))  # makes the oracles package importable


def two_bus(r=0.01, x=0.1, demand=1.0, c1=10.0):
    return Network(
        buses=[Bus(1), Bus(2, demand=demand)],
        lines=[Line(1, 2, r, x)],
        generators=[Generator(1, 0.0, 10.0, QuadraticCost(c1=c1))],
        slack_bus=1,
        name="two_bus",
    )


@pytest.fixture(scope="session")
def case2():
    return load_network(FIXTURES / "case2.m")


@pytest.fixture(scope="session")
def case3():
    return load_network(FIXTURES / "case3.m")


@pytest.fixture(scope="session")
def case30():
    return load_network(FIXTURES / "case30.m")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
