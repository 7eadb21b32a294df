"""``pipeclimber`` command line.

Exit status: 0 success, 1 computed but infeasible (torque, bend, slip),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from typing import Sequence

from . import __version__
from .bend import check_bend, network_speed_plans, straight_plan
from .design import FRICTION_SIGNS, MotorSpec, design_report
from .errors import FeasibilityError, InfeasibleGeometryError, InfeasibleHoldError, SourceError, ValidationError
from .netspec import load_design, load_network, write_trace_csv
from .sim import SimConfig, simulate, summarize, sweep_stiffness

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _load(loader, path: str):
    try:
        return loader(path)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None
    except SourceError as exc:
        raise UsageError(f"{path}:{exc.line}:{exc.column}: expected {exc.expected}, found {exc.found}") from None


def _stiffness_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers in lo:hi:step, got {text!r}") from None
    return lo, hi, step


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_design(args) -> int:
    design = _load(load_design, args.robot)
    try:
        motor = MotorSpec(args.motor_torque)
        report = design_report(
            design,
            motor,
            g=args.gravity,
            a=args.accel,
            C_R=args.cr,
            safety_factor=args.safety,
            friction_sign=FRICTION_SIGNS[args.friction_sign],
        )
    except InfeasibleHoldError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(report.to_json() + "\n" if args.format == "json" else report.to_text())
    return EXIT_OK if report.torque_ok else EXIT_INFEASIBLE


def cmd_check_bend(args) -> int:
    try:
        result = check_bend(args.R, args.D, args.angle, args.d, args.length)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    sys.stdout.write(result.to_json() + "\n" if args.format == "json" else result.to_text())
    return EXIT_INFEASIBLE if result.feasible is False else EXIT_OK


def _plan_rows(network, design, roll, ratio):
    plans = network_speed_plans(network, design, roll, ratio)
    if not plans:
        plans = [straight_plan(design.n_modules)]
    rows = []
    for plan in plans:
        seg = None if plan.segment_index is None else network.segments[plan.segment_index]
        rows.append({
            "segment": plan.segment_index,
            "angle": getattr(seg, "angle", None),
            "radius": getattr(seg, "radius", None),
            "contact_radius": plan.contact_radius,
            "calibrated": plan.calibrated,
            "path_radii": [None if r == float("inf") else r for r in plan.per_module_path_radius],
            "speed_scales": list(plan.per_module_speed_scale),
            "ratio": plan.reference_ratio_outer_to_inner,
        })
    return rows


def cmd_speed_plan(args) -> int:
    network = _load(load_network, args.network)
    design = _load(load_design, args.robot)
    try:
        rows = _plan_rows(network, design, args.roll, args.calibrate_ratio)
    except InfeasibleGeometryError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit({"roll": args.roll, "calibrate_ratio": args.calibrate_ratio, "bends": rows})
        return EXIT_OK
    n = design.n_modules
    head = ["seg", "angle", "R_mm", "rho_mm"] + [f"m{k}_scale" for k in range(n)] + ["outer:inner"]
    print("  ".join(f"{h:>9}" for h in head))
    for row in rows:
        def num(v, p):
            return "-" if v is None else f"{v:.{p}f}"

        seg = "straight" if row["segment"] is None else str(row["segment"])
        cells = [seg, num(row["angle"], 1), num(row["radius"], 2), num(row["contact_radius"], 2)]
        cells += [f"{s:.4f}" for s in row["speed_scales"]]
        cells.append(f"{row['ratio']:.4f}")
        print("  ".join(f"{c:>9}" for c in cells))
    return EXIT_OK


def _sim_config(args) -> SimConfig:
    return SimConfig(
        velocity=args.velocity,
        dt=args.dt,
        roll=args.roll,
        friction_sign=FRICTION_SIGNS[args.friction_sign],
        g=args.gravity,
    )


def cmd_simulate(args) -> int:
    network = _load(load_network, args.network)
    design = _load(load_design, args.robot)
    try:
        cfg = _sim_config(args)
        trace = simulate(network, design, cfg)
    except FeasibilityError as exc:
        print(f"infeasible: segment {exc.segment_index}: {exc.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        write_trace_csv(trace, args.out)
    summary = summarize(trace)
    if args.summary == "json":
        _emit(summary.to_dict())
    else:
        sys.stdout.write(summary.to_text())
    return EXIT_INFEASIBLE if summary.min_slip_margin < 0 else EXIT_OK


def cmd_sweep(args) -> int:
    network = _load(load_network, args.network)
    design = _load(load_design, args.robot)
    lo, hi, step = args.stiffness
    try:
        cfg = _sim_config(args)
        result = sweep_stiffness(network, design, cfg, lo, hi, step)
    except FeasibilityError as exc:
        print(f"infeasible: segment {exc.segment_index}: {exc.reason}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    if args.format == "json":
        _emit({
            "rows": [asdict(r) for r in result.rows],
            "first_feasible_stiffness": result.first_feasible_stiffness,
        })
    else:
        print(f"{'K_s_N_per_m':>12}  {'min_slip_N':>11}  {'max_comp_mm':>11}  {'saturated':>9}")
        for i, r in enumerate(result.rows):
            mark = "  *" if i == result.first_feasible else ""
            print(f"{r.stiffness:>12.4f}  {r.min_slip_margin:>11.6f}  {r.max_compression:>11.6f}  "
                  f"{r.saturation_events:>9d}{mark}")
        found = result.first_feasible_stiffness
        print("first_feasible = " + ("none" if found is None else f"{found:.4f} N/m"))
    return EXIT_OK if result.first_feasible is not None else EXIT_INFEASIBLE


def _sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--network", required=True, help="pipe network file (.pcn)")
    p.add_argument("--robot", required=True, help="robot design file (.pcr)")
    p.add_argument("--velocity", type=float, default=100.0, help="centroid speed, mm/s (default 100)")
    p.add_argument("--dt", type=float, default=0.001, help="time step, s (default 0.001)")
    p.add_argument("--roll", type=float, default=0.0,
                   help="roll about the robot axis, degrees from the first bend's outer wall")
    p.add_argument("--gravity", type=float, default=9.81, help="m/s^2 (default 9.81)")
    p.add_argument("--friction-sign", choices=sorted(FRICTION_SIGNS), default="paper")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipeclimber", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="size spring stiffness and motor torque")
    p.add_argument("--robot", required=True, help="robot design file (.pcr)")
    p.add_argument("--gravity", type=float, default=9.81, help="m/s^2 (default 9.81)")
    p.add_argument("--accel", type=float, default=0.0, help="m/s^2 (default 0, quasi-static)")
    p.add_argument("--cr", type=float, default=0.0, help="rolling resistance coefficient (default 0)")
    p.add_argument("--safety", type=float, default=2.0,
                   help="torque safety factor (default 2.0; the published 0.88 vs 0.23 N·m implies about 3.8)")
    p.add_argument("--motor-torque", type=float, default=0.88, help="selected motor torque, N·m (default 0.88)")
    p.add_argument("--friction-sign", choices=sorted(FRICTION_SIGNS), default="paper")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("check-bend", help="diameter and length bounds for a bend")
    p.add_argument("--R", type=float, required=True, help="bend centerline radius, mm")
    p.add_argument("--D", type=float, required=True, help="pipe inner diameter, mm")
    p.add_argument("--angle", type=float, default=90.0, help="bend angle, degrees (default 90)")
    p.add_argument("--d", type=float, help="robot minimum diameter, mm")
    p.add_argument("--length", type=float, help="robot length, mm")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_check_bend)

    p = sub.add_parser("speed-plan", help="differential track speeds per bend")
    p.add_argument("--network", required=True, help="pipe network file (.pcn)")
    p.add_argument("--robot", required=True, help="robot design file (.pcr)")
    p.add_argument("--roll", type=float, default=0.0, help="degrees from the first bend's outer wall")
    p.add_argument("--calibrate-ratio", type=float, help="back-solve the contact offset from this outer/inner ratio")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_speed_plan)

    p = sub.add_parser("simulate", help="quasi-static traversal trace")
    _sim_flags(p)
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--summary", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="spring stiffness sweep")
    _sim_flags(p)
    p.add_argument("--stiffness", type=_stiffness_range, default=(16.0, 26.0, 0.5), metavar="LO:HI:STEP",
                   help="N/m (default 16:26:0.5)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
