"""Planar bend geometry: diameter bounds, body-length bound, speed planning.

All lengths in mm, angles in degrees.  The diameter bound is written for a
general bend angle ``theta`` with ``sin(theta / 2)``; at 90 degrees that is the
``sin 45`` form of the classic result.  Anything evaluated at another angle
is flagged as an extension.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .design import RobotDesign
from .errors import InfeasibleGeometryError, ValidationError
from .geometry import DIRECTION_ANGLE, Bend, PipeNetwork, PipeSegment

MODULE_SPACING_DEG = 120.0

# Values published for the prototype in a 90 degree bend.
PUBLISHED_BEND = {"R": 90.0, "D": 160.0, "d": 129.54}
PUBLISHED_LENGTH = 150.0


@dataclass(frozen=True)
class DiameterBounds:
    d_lower: float
    d_upper: float
    clamped: bool  # raw lower bound was negative and was raised to 0
    extension: bool  # evaluated at an angle other than 90 degrees


def min_diameter_bounds(R: float, D: float, angle: float = 90.0) -> DiameterBounds:
    """Range ``(d_lower, d_upper)`` of robot minimum diameter that clears a bend.

    ``d_lower = (R + D/2) sin(angle/2) - (R - D/2)``, ``d_upper = D``.
    """
    if not (math.isfinite(R) and R > 0 and math.isfinite(D) and D > 0):
        raise ValidationError(f"R and D must be positive, got R={R}, D={D}")
    if not (0.0 < angle <= 90.0):
        raise ValidationError(f"bend angle must lie in (0, 90], got {angle}")
    raw = (R + D / 2.0) * math.sin(math.radians(angle) / 2.0) - (R - D / 2.0)
    return DiameterBounds(
        d_lower=max(raw, 0.0),
        d_upper=D,
        clamped=raw < 0.0,
        extension=angle != 90.0,
    )


def max_length(R: float, D: float, d: float) -> float:
    """Body-length bound ``sqrt((R + D/2)^2 - (R - D/2 + d)^2)`` for diameter ``d``."""
    if not (math.isfinite(R) and R > 0 and math.isfinite(D) and D > 0 and math.isfinite(d)):
        raise ValidationError(f"R and D must be positive and d finite, got R={R}, D={D}, d={d}")
    if d > D:
        raise InfeasibleGeometryError(f"robot diameter {d} exceeds pipe diameter {D}")
    outer = R + D / 2.0
    inner = R - D / 2.0 + d
    radicand = outer * outer - inner * inner
    if radicand < 0 and -radicand <= 1e-12 * outer * outer:
        radicand = 0.0  # d == D up to round-off
    if radicand < 0:
        raise InfeasibleGeometryError(f"no chord fits: (R + D/2)^2 - (R - D/2 + d)^2 = {radicand:.6g} < 0")
    return math.sqrt(radicand)


def chord_diameter(R: float, D: float, body_in_bend: float) -> float:
    """Diameter left to a body that reaches ``body_in_bend`` mm into a bend.

    Inverse of :func:`max_length`:
    ``sqrt((R + D/2)^2 - body_in_bend^2) - (R - D/2)``.
    """
    outer = R + D / 2.0
    L = min(max(body_in_bend, 0.0), outer)
    return math.sqrt(outer * outer - L * L) - (R - D / 2.0)


@dataclass(frozen=True)
class BendFeasibility:
    R: float
    D: float
    angle: float
    d: float | None
    length: float | None
    d_lower: float
    d_upper: float
    L_max: float | None
    feasible: bool | None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "D": self.D,
            "angle": self.angle,
            "d": self.d,
            "length": self.length,
            "d_lower": self.d_lower,
            "d_upper": self.d_upper,
            "L_max": self.L_max,
            "feasible": self.feasible,
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        def num(v):
            return "n/a" if v is None else f"{v:.2f}"

        verdict = "n/a" if self.feasible is None else ("feasible" if self.feasible else "infeasible")
        lines = [
            f"d_lower  = {num(self.d_lower)} mm",
            f"d_upper  = {num(self.d_upper)} mm",
            f"L_max    = {num(self.L_max)} mm",
            f"feasible = {verdict}",
        ]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def check_bend(
    R: float,
    D: float,
    angle: float = 90.0,
    d: float | None = None,
    length: float | None = None,
) -> BendFeasibility:
    """Evaluate both bend bounds for a robot of minimum diameter ``d`` and ``length``.

    Feasible means ``d_lower < d < d_upper`` and ``length <= L_max``.  With no
    ``d`` only the bounds are reported; with no ``length`` only the diameter
    condition decides.
    """
    bounds = min_diameter_bounds(R, D, angle)
    notes: list[str] = []
    if bounds.extension:
        notes.append(f"extension: bounds at {angle:g} degrees use the half-angle generalization")
    if bounds.clamped:
        notes.append("lower bound is negative: unconstrained from below, clamped to 0")
    if d is None:
        return BendFeasibility(R, D, angle, d, length, bounds.d_lower, bounds.d_upper, None, None, tuple(notes))

    try:
        L_max = max_length(R, D, d)
    except InfeasibleGeometryError as exc:
        notes.append(str(exc))
        L_max = None
    ok = bounds.d_lower < d < bounds.d_upper
    if length is not None:
        ok = ok and L_max is not None and length <= L_max
    if L_max is not None and all(
        math.isclose(v, PUBLISHED_BEND[k], abs_tol=1e-9) for k, v in (("R", R), ("D", D), ("d", d))
    ):
        notes.append(
            f"L_max {L_max:.2f} mm is below the published {PUBLISHED_LENGTH:g} mm robot length for "
            f"R={R:g}, D={D:g}, d={d:g}; the prototype relies on spring compliance beyond this bound"
        )
    return BendFeasibility(R, D, angle, d, length, bounds.d_lower, bounds.d_upper, L_max, ok, tuple(notes))


def module_azimuths(roll: float, n_modules: int = 3) -> list[float]:
    """Module azimuths in degrees, measured from the bend's outer direction."""
    step = 360.0 / n_modules
    return [roll + k * step for k in range(n_modules)]


def module_path_radii(
    R: float,
    contact_radius_outer: float,
    contact_radius_inner: float | None = None,
    roll: float = 0.0,
    n_modules: int = 3,
) -> list[float]:
    """Centerline radius of each module's contact path in a bend.

    ``radius_k = R + rho_k cos(azimuth_k)`` where ``rho_k`` is the outer
    contact offset for modules on the outer half (cos >= 0) and the inner
    offset otherwise.
    """
    if contact_radius_inner is None:
        contact_radius_inner = contact_radius_outer
    if not (R > 0):
        raise ValidationError(f"R must be positive, got {R}")
    if contact_radius_outer < 0 or contact_radius_inner < 0:
        raise ValidationError("contact radii must be non-negative")
    radii = []
    for az in module_azimuths(roll, n_modules):
        c = math.cos(math.radians(az))
        rho = contact_radius_outer if c >= 0 else contact_radius_inner
        radii.append(R + rho * c)
    return radii


def calibrate_contact_radius(R: float, ratio: float, roll: float = 0.0, n_modules: int = 3) -> float:
    """Contact offset ``rho`` at which outer/inner path radius equals ``ratio``."""
    if not (math.isfinite(ratio) and ratio >= 1.0):
        raise ValidationError(f"calibration ratio must be >= 1, got {ratio}")
    cosines = [math.cos(math.radians(az)) for az in module_azimuths(roll, n_modules)]
    c_hi, c_lo = max(cosines), min(cosines)
    denom = c_hi - ratio * c_lo
    if denom <= 0:
        raise InfeasibleGeometryError(f"ratio {ratio} is unreachable at roll {roll} degrees")
    rho = R * (ratio - 1.0) / denom
    if R + rho * c_lo <= 0:
        raise InfeasibleGeometryError(f"ratio {ratio} needs an inner path radius <= 0")
    return rho


@dataclass(frozen=True)
class SpeedPlan:
    per_module_path_radius: tuple[float, ...]
    per_module_speed_scale: tuple[float, ...]
    reference_ratio_outer_to_inner: float
    contact_radius: float | None = None
    calibrated: bool = False
    segment_index: int | None = None
    notes: tuple[str, ...] = field(default=())


def _plan_from_radii(radii: list[float], rho: float | None, calibrated: bool, index: int | None) -> SpeedPlan:
    if min(radii) <= 0:
        raise InfeasibleGeometryError(f"a module path radius is non-positive: {radii}")
    top = max(radii)
    return SpeedPlan(
        per_module_path_radius=tuple(radii),
        per_module_speed_scale=tuple(r / top for r in radii),
        reference_ratio_outer_to_inner=top / min(radii),
        contact_radius=rho,
        calibrated=calibrated,
        segment_index=index,
    )


def straight_plan(n_modules: int = 3, index: int | None = None) -> SpeedPlan:
    return SpeedPlan(
        per_module_path_radius=tuple(math.inf for _ in range(n_modules)),
        per_module_speed_scale=tuple(1.0 for _ in range(n_modules)),
        reference_ratio_outer_to_inner=1.0,
        segment_index=index,
    )


def speed_plan(
    bend: PipeSegment,
    design: RobotDesign,
    roll: float = 0.0,
    calibrate_ratio: float | None = None,
    segment_index: int | None = None,
) -> SpeedPlan:
    """Per-module track speed scales for a segment.

    Speeds are proportional to path radius so every track covers its path in
    the same time.  Geometric mode takes the contact offset as half the
    robot's fully compressed diameter; calibration mode back-solves it from a
    target outer/inner ratio.
    """
    if not isinstance(bend, Bend):
        return straight_plan(design.n_modules, segment_index)
    if calibrate_ratio is not None:
        rho = calibrate_contact_radius(bend.radius, calibrate_ratio, roll, design.n_modules)
        calibrated = True
    else:
        rho = design.d_min / 2.0
        calibrated = False
    radii = module_path_radii(bend.radius, rho, rho, roll, design.n_modules)
    return _plan_from_radii(radii, rho, calibrated, segment_index)


def first_bend_outer_angle(network: PipeNetwork) -> float:
    """Transverse angle of the first bend's outer wall; roll is measured from it."""
    for _, bend, _, _ in network.bends():
        return (DIRECTION_ANGLE[bend.direction] + 180.0) % 360.0
    return 180.0


def roll_in_bend(network: PipeNetwork, bend: Bend, roll: float) -> float:
    """Convert a network-level roll into the roll relative to ``bend``'s outer wall."""
    outer = (DIRECTION_ANGLE[bend.direction] + 180.0) % 360.0
    return (first_bend_outer_angle(network) + roll - outer) % 360.0


def network_speed_plans(
    network: PipeNetwork,
    design: RobotDesign,
    roll: float = 0.0,
    calibrate_ratio: float | None = None,
) -> list[SpeedPlan]:
    """One plan per bend segment, in network order.

    ``roll`` is the robot's rotation about its axis measured from the outer
    wall of the first bend.  The frame is parallel-transported, so later
    bends in other directions see the same modules at other azimuths.
    Calibration, when requested, is solved at the first bend's orientation
    and the resulting contact offset is reused for every bend.
    """
    plans = []
    rho = None
    if calibrate_ratio is not None:
        for _, bend, _, _ in network.bends():
            rho = calibrate_contact_radius(bend.radius, calibrate_ratio, roll, design.n_modules)
            break
    for i, bend, _, _ in network.bends():
        local_roll = roll_in_bend(network, bend, roll)
        if rho is None:
            plans.append(speed_plan(bend, design, local_roll, segment_index=i))
        else:
            radii = module_path_radii(bend.radius, rho, rho, local_roll, design.n_modules)
            plans.append(_plan_from_radii(radii, rho, True, i))
    return plans
