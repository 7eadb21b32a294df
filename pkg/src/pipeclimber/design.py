"""Static and quasi-static force balance for the spring-loaded track modules.

Units follow the force balance: kg, m, N, N/m, m/s^2.  Robot dimensions that
describe geometry (length, diameters, spacing, lug radius) stay in mm.

Friction sign: the published tractive-effort balance subtracts wall friction
(``FRICTION_PAPER = -1``).  ``FRICTION_PHYSICAL = +1`` adds it instead, which
is what a preloaded track dragging along the wall would normally see.  Reports
carry both values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import InfeasibleHoldError, ValidationError

G_DEFAULT = 9.81
FRICTION_PAPER = -1
FRICTION_PHYSICAL = +1
FRICTION_SIGNS = {"paper": FRICTION_PAPER, "physical": FRICTION_PHYSICAL}

N_M_PER_KG_CM = 0.0980665

# Published prototype constants, compared against when the published inputs are used.
PUBLISHED_STIFFNESS = 18.06  # N/m
PUBLISHED_TORQUE = 0.23  # N·m
PUBLISHED_INPUTS = {"mass": 0.470, "preload_compression": 0.026, "mu_s": 0.7}
DISCREPANCY_THRESHOLD = 0.05


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class LugSpec:
    lug_count: int = 22
    min_contact_count: int = 9
    lug_radius: float = 80.0  # mm

    def __post_init__(self) -> None:
        _check(self.lug_count >= 1, f"lug_count must be >= 1, got {self.lug_count}")
        _check(
            0 <= self.min_contact_count <= self.lug_count,
            f"min_contact_count must lie in [0, lug_count], got {self.min_contact_count}",
        )
        _check(math.isfinite(self.lug_radius) and self.lug_radius > 0, f"lug_radius must be positive, got {self.lug_radius}")


@dataclass(frozen=True)
class MotorSpec:
    stall_torque: float  # N·m
    rated_speed: float = 35.0  # RPM
    gear_ratio: float = 1000.0

    def __post_init__(self) -> None:
        _check(math.isfinite(self.stall_torque) and self.stall_torque > 0, "motor stall_torque must be positive")
        _check(math.isfinite(self.rated_speed) and self.rated_speed > 0, "motor rated_speed must be positive")

    @classmethod
    def from_kg_cm(cls, torque_kg_cm: float, rated_speed: float = 35.0, gear_ratio: float = 1000.0) -> "MotorSpec":
        return cls(torque_kg_cm * N_M_PER_KG_CM, rated_speed, gear_ratio)


@dataclass(frozen=True)
class RobotDesign:
    """Every robot constant used by the solver and the simulator.

    ``preload_compression`` is the spring compression during a nominal
    vertical climb (m).  ``spring_spacing`` is the axial distance between the
    front and rear spring stations (mm).  ``r_wheel`` is optional because no
    value is published; torque cannot be computed without it.
    """

    mass: float
    length: float
    d_max: float
    d_min: float
    spring_stiffness: float
    preload_compression: float
    mu_kinetic: float
    mu_static: float | None = None
    spring_spacing: float = 30.0
    r_wheel: float | None = None
    lug: LugSpec = field(default_factory=LugSpec)
    n_modules: int = 3
    springs_per_module: int = 4

    def __post_init__(self) -> None:
        if self.mu_static is None:
            object.__setattr__(self, "mu_static", self.mu_kinetic)
        vals = [self.mass, self.length, self.d_max, self.d_min, self.spring_stiffness,
                self.preload_compression, self.mu_kinetic, self.mu_static, self.spring_spacing]
        _check(_finite(*vals), "design values must be finite")
        _check(self.mass > 0, f"mass must be positive, got {self.mass}")
        _check(self.length > 0, f"length must be positive, got {self.length}")
        _check(0 < self.d_min < self.d_max, f"need 0 < d_min < d_max, got d_min={self.d_min}, d_max={self.d_max}")
        _check(self.spring_stiffness > 0, f"spring stiffness must be positive, got {self.spring_stiffness}")
        _check(self.preload_compression >= 0, f"preload compression must be >= 0, got {self.preload_compression}")
        _check(0 < self.mu_kinetic <= self.mu_static <= 2,
               f"need 0 < mu_k <= mu_s <= 2, got mu_k={self.mu_kinetic}, mu_s={self.mu_static}")
        _check(0 <= self.spring_spacing < self.length,
               f"spring spacing must lie in [0, length), got {self.spring_spacing}")
        if self.r_wheel is not None:
            _check(math.isfinite(self.r_wheel) and self.r_wheel > 0, f"r_wheel must be positive, got {self.r_wheel}")
        _check(self.n_modules >= 1 and self.springs_per_module >= 1, "module and spring counts must be >= 1")
        _check(self.springs_per_module % 2 == 0, "springs_per_module must split evenly between front and rear stations")

    @property
    def max_travel(self) -> float:
        """Radial travel of one module between the bracket stop and the shaft stop, mm."""
        return (self.d_max - self.d_min) / 2.0

    @property
    def springs_per_station(self) -> int:
        return self.springs_per_module // 2


def required_stiffness(
    m: float,
    x: float,
    mu_s: float,
    g: float = G_DEFAULT,
    n_modules: int = 3,
    springs_per_module: int = 4,
) -> float:
    """Minimum spring stiffness (N/m) that holds the robot in a vertical pipe.

    Solves ``n_modules * springs_per_module * mu_s * K_s * x = m * g`` for K_s.
    """
    _check(_finite(m, x, mu_s, g), "inputs must be finite")
    _check(m >= 0 and g >= 0, "mass and gravity must be non-negative")
    _check(x >= 0 and mu_s >= 0, "preload and friction must be non-negative")
    _check(n_modules >= 1 and springs_per_module >= 1, "module and spring counts must be >= 1")
    if x == 0:
        raise InfeasibleHoldError("zero preload compression gives no normal force to hold the robot")
    if mu_s == 0:
        raise InfeasibleHoldError("zero static friction cannot hold the robot")
    K = m * g / (n_modules * springs_per_module * mu_s * x)
    if not math.isfinite(K):
        raise InfeasibleHoldError(f"preload {x} m and friction {mu_s} are too small to hold the robot")
    return K


def normal_force(K_s: float, x: float, n_modules: int = 3, springs_per_module: int = 4) -> float:
    """Total wall normal force from all preloaded springs, N."""
    _check(_finite(K_s, x) and K_s >= 0 and x >= 0, "stiffness and compression must be non-negative")
    _check(n_modules >= 0 and springs_per_module >= 0, "counts must be non-negative")
    return n_modules * springs_per_module * K_s * x


def rolling_resistance(N: float, C_R: float = 0.0) -> float:
    _check(_finite(N, C_R) and N >= 0 and C_R >= 0, "normal force and C_R must be non-negative")
    return N * C_R


def sliding_friction(mu_k: float, K_s: float, x: float, n_modules: int = 3, springs_per_module: int = 4) -> float:
    _check(_finite(mu_k) and mu_k >= 0, "mu_k must be non-negative")
    return mu_k * normal_force(K_s, x, n_modules, springs_per_module)


def tractive_effort(
    m: float,
    a: float,
    g: float,
    f: float,
    RR: float = 0.0,
    friction_sign: int = FRICTION_PAPER,
) -> float:
    """Total tractive effort ``RR + m*a + friction_sign*f + m*g``, N."""
    _check(_finite(m, a, g, f, RR), "inputs must be finite")
    _check(friction_sign in (FRICTION_PAPER, FRICTION_PHYSICAL), f"friction_sign must be -1 or +1, got {friction_sign}")
    return RR + m * a + friction_sign * f + m * g


def motor_torque(TTE: float, r_wheel: float) -> float:
    """Total drive torque ``TTE * r_wheel``, N·m."""
    _check(_finite(TTE, r_wheel), "inputs must be finite")
    _check(r_wheel > 0, f"r_wheel must be positive, got {r_wheel}")
    return TTE * r_wheel


@dataclass(frozen=True)
class DesignReport:
    normal_force_total: float
    rolling_resistance: float
    sliding_friction: float
    inertial_force: float
    tractive_effort: float
    tractive_effort_alternate: float
    required_torque: float | None
    required_torque_per_motor: float | None
    required_stiffness: float
    safety_factor_applied: float
    torque_ok: bool | None
    gravity: float
    acceleration: float
    friction_sign: int
    r_wheel: float | None
    motor_torque: float
    discrepancy_notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "N": self.normal_force_total,
            "RR": self.rolling_resistance,
            "f": self.sliding_friction,
            "F_a": self.inertial_force,
            "TTE": self.tractive_effort,
            "TTE_alternate": self.tractive_effort_alternate,
            "friction_sign": "paper" if self.friction_sign == FRICTION_PAPER else "physical",
            "tau_total": self.required_torque,
            "tau_per_motor": self.required_torque_per_motor,
            "K_s_required": self.required_stiffness,
            "safety_factor": self.safety_factor_applied,
            "motor_torque": self.motor_torque,
            "torque_ok": self.torque_ok,
            "g": self.gravity,
            "a": self.acceleration,
            "r_wheel": self.r_wheel,
            "notes": list(self.discrepancy_notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        """Flat ``key = value`` document; floats to six decimals."""
        lines = []
        for key, value in self.to_dict().items():
            if key == "notes":
                continue
            lines.append(f"{key} = {_fmt(value)}")
        for i, note in enumerate(self.discrepancy_notes):
            lines.append(f"note[{i}] = {note}")
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _uses_published_inputs(design: RobotDesign) -> bool:
    return (
        math.isclose(design.mass, PUBLISHED_INPUTS["mass"], rel_tol=1e-6)
        and math.isclose(design.preload_compression, PUBLISHED_INPUTS["preload_compression"], rel_tol=1e-6)
        and math.isclose(design.mu_static, PUBLISHED_INPUTS["mu_s"], rel_tol=1e-6)
    )


def _rel_diff(value: float, ref: float) -> float:
    return abs(value - ref) / abs(ref)


def design_report(
    design: RobotDesign,
    motor: MotorSpec,
    g: float = G_DEFAULT,
    a: float = 0.0,
    C_R: float = 0.0,
    safety_factor: float = 2.0,
    friction_sign: int = FRICTION_PAPER,
) -> DesignReport:
    """Chain the force balances into a :class:`DesignReport`.

    ``torque_ok`` compares the motor against ``safety_factor`` times the
    per-motor share of the required torque; it is ``None`` when the design
    has no ``r_wheel``.
    """
    _check(_finite(safety_factor) and safety_factor > 0, f"safety factor must be positive, got {safety_factor}")
    _check(_finite(g, a, C_R), "g, a and C_R must be finite")
    n_mod, n_spr = design.n_modules, design.springs_per_module
    x = design.preload_compression

    K_req = required_stiffness(design.mass, x, design.mu_static, g, n_mod, n_spr)
    N = normal_force(design.spring_stiffness, x, n_mod, n_spr)
    RR = rolling_resistance(N, C_R)
    f = sliding_friction(design.mu_kinetic, design.spring_stiffness, x, n_mod, n_spr)
    F_a = design.mass * a
    tte = tractive_effort(design.mass, a, g, f, RR, friction_sign)
    tte_alt = tractive_effort(design.mass, a, g, f, RR, -friction_sign)

    notes: list[str] = []
    tau = tau_motor = None
    ok = None
    if design.r_wheel is None:
        notes.append("r_wheel not given: torque and torque_ok not computed")
    else:
        tau = motor_torque(tte, design.r_wheel)
        tau_motor = tau / n_mod
        ok = motor.stall_torque >= safety_factor * tau_motor

    if _uses_published_inputs(design):
        if _rel_diff(K_req, PUBLISHED_STIFFNESS) > DISCREPANCY_THRESHOLD:
            notes.append(
                f"required stiffness {K_req:.2f} N/m differs from the published {PUBLISHED_STIFFNESS} N/m "
                f"for m={design.mass} kg, x={x} m, mu={design.mu_static}, g={g}"
            )
        if tau is not None and _rel_diff(tau, PUBLISHED_TORQUE) > DISCREPANCY_THRESHOLD:
            notes.append(
                f"total torque {tau:.4f} N·m differs from the published {PUBLISHED_TORQUE} N·m "
                f"(r_wheel={design.r_wheel} m, friction sign {friction_sign:+d})"
            )

    return DesignReport(
        normal_force_total=N,
        rolling_resistance=RR,
        sliding_friction=f,
        inertial_force=F_a,
        tractive_effort=tte,
        tractive_effort_alternate=tte_alt,
        required_torque=tau,
        required_torque_per_motor=tau_motor,
        required_stiffness=K_req,
        safety_factor_applied=safety_factor,
        torque_ok=ok,
        gravity=g,
        acceleration=a,
        friction_sign=friction_sign,
        r_wheel=design.r_wheel,
        motor_torque=motor.stall_torque,
        discrepancy_notes=tuple(notes),
    )
