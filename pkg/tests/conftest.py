from __future__ import annotations

import pytest

from pipeclimber.design import RobotDesign
from pipeclimber.geometry import PipeNetwork, PipeSpec, Straight

from helpers import ACCEPTANCE_LINES, make_bend_network, make_prototype_design

def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def prototype_design() -> RobotDesign:
    return make_prototype_design()


@pytest.fixture
def bend_network() -> PipeNetwork:
    return make_bend_network()


@pytest.fixture
def vertical_network() -> PipeNetwork:
    return PipeNetwork(PipeSpec(160.0), (Straight(500.0, incline=90.0),))
