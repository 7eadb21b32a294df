"""Builders shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from pipeclimber.design import RobotDesign
from pipeclimber.geometry import Bend, PipeNetwork, PipeSpec, Straight

FIXTURES = Path(__file__).parent / "fixtures"

# Filled by the acceptance tests, printed at the end of the run by conftest.
ACCEPTANCE_LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(ACCEPTANCE_LINES[-1])


def make_prototype_design(**overrides) -> RobotDesign:
    kw = dict(
        mass=0.470,
        length=150.0,
        d_max=163.33,
        d_min=129.54,
        spring_stiffness=18.06,
        preload_compression=0.026,
        mu_kinetic=0.7,
    )
    kw.update(overrides)
    return RobotDesign(**kw)


def make_bend_network(D: float = 160.0, radius: float = 90.0, direction: str = "left") -> PipeNetwork:
    return PipeNetwork(
        PipeSpec(D),
        (Straight(500.0, incline=90.0), Bend(90.0, radius, direction), Straight(500.0)),
    )
