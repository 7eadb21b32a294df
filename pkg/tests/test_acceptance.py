"""One test per acceptance criterion, each recording a PASS/FAIL line.

The lines are printed at the end of the pytest run (see conftest).
"""

import contextlib
import io
import json
import math
import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipeclimber.cli import main
from pipeclimber.design import FRICTION_PAPER, FRICTION_PHYSICAL, MotorSpec, design_report, motor_torque, required_stiffness
from pipeclimber.errors import SourceError
from pipeclimber.netspec import emit_design, emit_network, parse_design, parse_network, write_trace_csv
from pipeclimber.sim import SimConfig, simulate, summarize, sweep_stiffness

from helpers import FIXTURES, make_bend_network, make_prototype_design, record
from strategies import designs, networks


def cli(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = main(list(argv))
    return code, out.getvalue()


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def number(field):
    return float(field.split()[0])


def test_criterion_1_diameter_bounds():
    argv = ("check-bend", "--R", "90", "--D", "160", "--angle", "90")
    code, out = cli(*argv)
    fields = {k.strip(): v for k, v in kv(out).items()}
    d_lower, d_upper = number(fields["d_lower"]), number(fields["d_upper"])
    runs = []
    for _ in range(5):
        start = time.perf_counter()
        cli(*argv)
        runs.append(time.perf_counter() - start)
    elapsed = min(runs)
    ok = code == 0 and abs(d_lower - 110.21) <= 0.5 and abs(d_upper - 160) <= 0.5 and elapsed < 0.010
    record(1, ok, f"d_lower={d_lower:.2f} d_upper={d_upper:.2f} runtime={elapsed * 1000:.2f} ms")
    assert ok


def test_criterion_2_length_bound():
    code, out = cli("check-bend", "--R", "90", "--D", "160", "--angle", "90", "--d", "129.54", "--format", "json")
    data = json.loads(out)
    note = any("150" in n for n in data["notes"])
    ok = abs(data["L_max"] - 97.10) <= 0.01 and note
    record(2, ok, f"L_max={data['L_max']:.4f} note_vs_150mm={note}")
    assert ok


_CLOSURE = {"n": 0, "worst": 0.0}


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(
    st.floats(min_value=1e-3, max_value=100),
    st.floats(min_value=1e-4, max_value=0.2),
    st.floats(min_value=0.01, max_value=2),
)
def _closure_property(m, x, mu):
    K = required_stiffness(m, x, mu, 9.81)
    err = abs(mu * 12 * K * x - m * 9.81) / (m * 9.81)
    _CLOSURE["n"] += 1
    _CLOSURE["worst"] = max(_CLOSURE["worst"], err)
    assert err <= 1e-9


def test_criterion_3_hold_closure():
    _closure_property()
    report = design_report(make_prototype_design(), MotorSpec(0.88))
    note = any("18.06" in n for n in report.discrepancy_notes)
    ok = _CLOSURE["n"] >= 1000 and abs(report.required_stiffness - 21.11) <= 0.01 and note
    record(3, ok, f"triples={_CLOSURE['n']} worst_rel_err={_CLOSURE['worst']:.1e} "
                  f"K_s={report.required_stiffness:.4f} note_vs_18.06={note}")
    assert ok


def test_criterion_4_tractive_effort():
    design = make_prototype_design(r_wheel=0.02)
    paper = design_report(design, MotorSpec(0.88), friction_sign=FRICTION_PAPER).tractive_effort
    physical = design_report(design, MotorSpec(0.88), friction_sign=FRICTION_PHYSICAL).tractive_effort
    rng = random.Random(4)
    linear = True
    for _ in range(1000):
        tte, r, c = rng.uniform(-50, 50), rng.uniform(1e-3, 0.5), rng.uniform(0.01, 100)
        linear &= math.isclose(motor_torque(tte, c * r), c * motor_torque(tte, r), rel_tol=1e-12, abs_tol=1e-15)
    ok = abs(paper - 0.666) <= 0.001 and abs(physical - 8.555) <= 0.001 and linear
    record(4, ok, f"TTE_paper={paper:.6f} TTE_physical={physical:.6f} torque_linear={linear}")
    assert ok


def test_criterion_5_speed_plan():
    net, robot = str(FIXTURES / "prototype_bend.pcn"), str(FIXTURES / "prototype.pcr")
    _, cal = cli("speed-plan", "--network", net, "--robot", robot, "--calibrate-ratio", "2.54")
    row = cal.splitlines()[1].split()
    ratio, inner = float(row[-1]), float(row[-2])
    _, geo = cli("speed-plan", "--network", net, "--robot", robot)
    geo_ratio = float(geo.splitlines()[1].split()[-1])
    ok = row[-1] == "2.5400" and abs(inner - 0.3937) <= 1e-4 and abs(geo_ratio - 2.686) <= 0.005
    record(5, ok, f"calibrated ratio={ratio:.4f} inner_scale={inner:.4f} geometric ratio={geo_ratio:.4f}")
    assert ok


def test_criterion_6_bend_events():
    net, design = make_bend_network(), make_prototype_design()
    start = time.perf_counter()
    trace = simulate(net, design, SimConfig(velocity=100, dt=0.001))
    summary = summarize(trace)
    elapsed = time.perf_counter() - start
    final = summary.final_compression
    inner_gt_outer = min(final[1], final[2]) > final[0]
    ok = (
        summary.delay is not None
        and abs(summary.delay - 0.300) <= 0.001
        and summary.front_expansion
        and inner_gt_outer
        and elapsed < 1.0
    )
    record(6, ok, f"delay={summary.delay:.3f} s front_expansion={summary.front_expansion} "
                  f"final outer={final[0]:.3f} inner={final[1]:.3f}/{final[2]:.3f} mm runtime={elapsed:.3f} s")
    assert ok


def test_criterion_7_sweep():
    net = parse_network((FIXTURES / "vertical.pcn").read_text())
    result = sweep_stiffness(net, make_prototype_design(), SimConfig(), 16, 26, 0.5)
    margins = [r.min_slip_margin for r in result.rows]
    increasing = all(b > a for a, b in zip(margins, margins[1:]))
    first = result.first_feasible_stiffness
    ok = increasing and first == 21.5
    record(7, ok, f"strictly_increasing={increasing} first_feasible={first}")
    assert ok


_ROUND_TRIP = {"networks": 0, "designs": 0}


@settings(max_examples=1000, deadline=None, derandomize=True)
@given(networks(), designs())
def _round_trip_property(net, design):
    assert parse_network(emit_network(net)) == net
    assert parse_design(emit_design(design)) == design
    _ROUND_TRIP["networks"] += 1
    _ROUND_TRIP["designs"] += 1


def _corpus_positions():
    total = correct = 0
    for path in sorted((FIXTURES / "invalid").iterdir()):
        text = path.read_bytes().decode("utf-8")
        header = text.split("\n", 1)[0].strip()
        expected = tuple(int(v) for v in header.split()[-1].split(":")) if header.startswith("# expect") else (1, 1)
        parse = parse_network if path.suffix == ".pcn" else parse_design
        total += 1
        try:
            parse(text)
        except SourceError as exc:
            correct += (exc.line, exc.column) == expected
    return total, correct


def test_criterion_8_parser_robustness(tmp_path):
    _round_trip_property()
    total, correct = _corpus_positions()
    net, design = make_bend_network(), make_prototype_design()
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        write_trace_csv(simulate(net, design), p)
    identical = paths[0].read_bytes() == paths[1].read_bytes()
    ok = _ROUND_TRIP["networks"] >= 1000 and total > 0 and correct == total and identical
    record(8, ok, f"round_trips={_ROUND_TRIP['networks']} invalid_fixtures={correct}/{total} csv_identical={identical}")
    assert ok
