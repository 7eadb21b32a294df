"""Quasi-static traversal of a pipe network.

Each module carries two spring stations, front at ``s + spacing/2`` and rear
at ``s - spacing/2`` along the centerline.  At every step the compression of
a station, relative to its vertical-climb preload, is the sum of

* a chord deficit: a station ``L_in`` mm deep inside a bend (distance to the
  nearer bend end, capped at the body length) only has
  ``sqrt((R + D/2)^2 - L_in^2) - (R - D/2)`` of diameter, floored at the
  bend's lower diameter bound;
* a tilt allowance: where the body chord of length ``L`` centred on the
  station is tilted by ``psi`` against the local pipe axis, the section
  normal to the body is ``1/cos(psi)`` wider, which lets the springs expand;
* gravity: the radial part of the weight is shared by the modules whose
  outward direction faces it, weighted by the cosine of the angle.

The sum is clamped between the bracket stop (robot at ``d_max``) and the
shaft stop (robot at ``d_min``); clamped samples are flagged.

Nothing here is integrated in time.  Every sample is a function of the
station's arc position alone, so the rear trace is the front trace delayed by
``spacing / velocity`` and changing ``dt`` only changes where samples land.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bend import first_bend_outer_angle, min_diameter_bounds, network_speed_plans, roll_in_bend, speed_plan
from .design import FRICTION_PAPER, FRICTION_PHYSICAL, G_DEFAULT, RobotDesign
from .errors import FeasibilityError, InfeasibleGeometryError, PathRangeError, ValidationError
from .geometry import Bend, PathPose, PipeNetwork

MAX_STEP_MM = 5.0
FRONT, REAR = 0, 1
PEAK_FRACTION = 0.9
_EPS = 1e-9


@dataclass(frozen=True)
class SimConfig:
    velocity: float = 100.0  # mm/s
    dt: float = 0.001  # s
    roll: float = 0.0  # degrees from the first bend's outer wall
    friction_sign: int = FRICTION_PAPER
    g: float = G_DEFAULT
    accel: float = 0.0
    C_R: float = 0.0
    s0: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.velocity) and self.velocity > 0):
            raise ValidationError(f"velocity must be positive, got {self.velocity}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.velocity * self.dt > MAX_STEP_MM + 1e-12:
            raise ValidationError(
                f"step velocity*dt = {self.velocity * self.dt:g} mm exceeds {MAX_STEP_MM:g} mm"
            )
        if self.friction_sign not in (FRICTION_PAPER, FRICTION_PHYSICAL):
            raise ValidationError(f"friction_sign must be -1 or +1, got {self.friction_sign}")
        if not (math.isfinite(self.g) and self.g >= 0):
            raise ValidationError(f"g must be non-negative, got {self.g}")


@dataclass(frozen=True)
class SpringState:
    module_id: int
    station: str  # "front" | "rear"
    compression_delta: float  # mm, positive = further compressed
    normal_force: float  # N
    saturated: bool = False


def preload_travel(design: RobotDesign, D: float) -> float:
    """Module travel already used at preload: distance from the bracket stop, mm."""
    return (design.d_max - D) / 2.0


def available_diameter(network: PipeNetwork, station_s, span: float) -> np.ndarray | float:
    """Diameter the body can occupy at ``station_s`` from the bend chord relation.

    ``L_in`` is the station's depth inside a bend, measured to the nearer bend
    end and clamped to ``[0, span]``.  The result lies in ``[d_floor, D]``,
    where ``d_floor`` is the bend's lower diameter bound (at least 0).
    """
    scalar = np.ndim(station_s) == 0
    s = np.atleast_1d(np.asarray(station_s, dtype=float))
    total = network.total_arc_length
    if np.any(s < -_EPS) or np.any(s > total + _EPS):
        raise PathRangeError(f"station outside [0, {total}]")
    D = network.diameter
    out = np.full(s.shape, D)
    for _, bend, a, b in network.bends():
        depth = np.clip(np.minimum(s - a, b - s), 0.0, span)
        inside = (s >= a) & (s <= b)
        outer = bend.radius + D / 2.0
        L = np.minimum(depth, outer)
        d = np.sqrt(outer * outer - L * L) - (bend.radius - D / 2.0)
        floor = min_diameter_bounds(bend.radius, D, bend.angle).d_lower
        d = np.clip(d, floor, D)
        out = np.where(inside, np.minimum(out, d), out)
    return float(out[0]) if scalar else out


def tilt_factor(network: PipeNetwork, station_s, span: float) -> np.ndarray:
    """``1/cos(psi)`` for the body chord of length ``span`` centred on each station."""
    s = np.atleast_1d(np.asarray(station_s, dtype=float))
    h = span / 2.0
    _, p_back, _, _, _ = network.sample(s - h)
    _, p_front, _, _, _ = network.sample(s + h)
    _, _, t, _, _ = network.sample(np.clip(s, 0.0, network.total_arc_length), extrapolate=False)
    chord = p_front - p_back
    norm = np.linalg.norm(chord, axis=1)
    cos_psi = np.clip(np.einsum("ij,ij->i", chord, t) / norm, 1e-6, 1.0)
    # round-off on straight stretches must not show up as expansion
    cos_psi = np.where(cos_psi > 1.0 - 1e-12, 1.0, cos_psi)
    return 1.0 / cos_psi


def module_directions(network: PipeNetwork, u: np.ndarray, l: np.ndarray, roll: float, n_modules: int) -> np.ndarray:  # noqa: E741
    """Outward unit vectors of each module, shape ``(k, n_modules, 3)``."""
    base = first_bend_outer_angle(network) + roll
    betas = np.radians([base + j * 360.0 / n_modules for j in range(n_modules)])
    return np.cos(betas)[None, :, None] * u[:, None, :] + np.sin(betas)[None, :, None] * l[:, None, :]


def _gravity_compression(t, u, l, network, design, roll, g):  # noqa: E741
    """Extra compression (mm) per module from the radial weight, shape ``(k, n)``."""
    down = np.array([0.0, 0.0, -1.0])
    radial = down[None, :] - (t @ down)[:, None] * t
    mag = np.linalg.norm(radial, axis=1)
    safe = np.where(mag > 1e-12, mag, 1.0)
    g_hat = radial / safe[:, None]
    dirs = module_directions(network, u, l, roll, design.n_modules)
    w = np.maximum(0.0, np.einsum("kmj,kj->km", dirs, g_hat))
    wsum = w.sum(axis=1)
    share = np.where(wsum[:, None] > 0, w / np.where(wsum > 0, wsum, 1.0)[:, None], 0.0)
    share = np.where(mag[:, None] > 1e-12, share, 0.0)
    load = design.mass * g * mag[:, None] * share
    return load / (design.springs_per_module * design.spring_stiffness) * 1000.0


def gravity_load_distribution(pose: PathPose, design: RobotDesign, network: PipeNetwork, roll: float = 0.0,
                              g: float = G_DEFAULT) -> tuple[float, ...]:
    """Extra compression (mm) per module from the weight at ``pose`` (unclamped)."""
    t = np.array([pose.axis_direction])
    u = np.array([pose.up])
    l = np.array([pose.left])  # noqa: E741
    return tuple(float(v) for v in _gravity_compression(t, u, l, network, design, roll, g)[0])


def station_compression(network: PipeNetwork, design: RobotDesign, station_s: np.ndarray, cfg: SimConfig):
    """Clamped compression deltas ``(k, n_modules)`` and saturation flags for stations."""
    D = network.diameter
    total = network.total_arc_length
    s_in = np.clip(station_s, 0.0, total)
    d_avail = available_diameter(network, s_in, design.length)
    d_eff = d_avail * tilt_factor(network, station_s, design.length)
    geom = (D - d_eff) / 2.0
    _, _, t, u, l = network.sample(s_in, extrapolate=False)  # noqa: E741
    grav = _gravity_compression(t, u, l, network, design, cfg.roll, cfg.g)
    raw = geom[:, None] + grav
    p0 = preload_travel(design, D)
    lo, hi = -p0, design.max_travel - p0
    delta = np.clip(raw, lo, hi)
    saturated = (raw < lo - 1e-9) | (raw > hi + 1e-9)
    return delta, saturated


@dataclass
class TraversalTrace:
    t: np.ndarray
    s: np.ndarray
    segment: np.ndarray
    compression: np.ndarray  # (n, modules, 2) mm; [:, :, 0] front, [:, :, 1] rear
    saturated: np.ndarray  # (n, modules, 2) bool
    station_force: np.ndarray  # (n, modules, 2) N
    normal_force: np.ndarray  # (n, modules) N
    slip_margin: np.ndarray  # (n, modules) N
    speed_scale: np.ndarray  # (n, modules)
    gravity_axial: np.ndarray  # (n,)
    tractive_effort: np.ndarray  # (n,) N
    velocity: float
    dt: float
    spacing: float
    span: float
    bend_bounds: list[tuple[float, float]]
    r_wheel: float | None = None
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.t.shape[0]

    def springs(self, i: int) -> list[SpringState]:
        """The six spring states of row ``i``."""
        out = []
        n_mod = self.compression.shape[1]
        for m in range(n_mod):
            for st, name in ((FRONT, "front"), (REAR, "rear")):
                out.append(SpringState(m, name, float(self.compression[i, m, st]),
                                       float(self.station_force[i, m, st]), bool(self.saturated[i, m, st])))
        return out


def check_traversable(network: PipeNetwork, design: RobotDesign) -> list[str]:
    """Raise :class:`FeasibilityError` for the first impassable segment.

    The body-length bound is reported as a warning only: it is a 90 degree
    chord bound that the published prototype itself exceeds.
    """
    from .bend import max_length

    D = network.diameter
    warnings = []
    if D > design.d_max:
        raise FeasibilityError(0, f"pipe diameter {D:g} mm exceeds robot maximum diameter {design.d_max:g} mm")
    if D < design.d_min:
        raise FeasibilityError(0, f"pipe diameter {D:g} mm is below robot minimum diameter {design.d_min:g} mm")
    for i, bend, _, _ in network.bends():
        bounds = min_diameter_bounds(bend.radius, D, bend.angle)
        if not (bounds.d_lower < design.d_min < bounds.d_upper):
            raise FeasibilityError(
                i, f"robot minimum diameter {design.d_min:g} mm outside ({bounds.d_lower:.2f}, {bounds.d_upper:.2f})"
            )
        L_max = max_length(bend.radius, D, design.d_min)
        if design.length > L_max:
            warnings.append(
                f"segment {i}: body length {design.length:g} mm exceeds chord bound {L_max:.2f} mm; "
                "spring travel may saturate"
            )
    return warnings


def _speed_plans(network: PipeNetwork, design: RobotDesign, roll: float):
    try:
        return network_speed_plans(network, design, roll)
    except InfeasibleGeometryError as exc:
        for i, bend, _, _ in network.bends():
            try:
                speed_plan(bend, design, roll_in_bend(network, bend, roll))
            except InfeasibleGeometryError:
                raise FeasibilityError(i, str(exc)) from None
        raise


def simulate(network: PipeNetwork, design: RobotDesign, cfg: SimConfig | None = None) -> TraversalTrace:
    """Step the robot centroid from ``cfg.s0`` to the end of the network."""
    cfg = cfg or SimConfig()
    warnings = check_traversable(network, design)
    total = network.total_arc_length
    if not (0.0 <= cfg.s0 < total):
        raise ValidationError(f"start position s0 must lie in [0, {total:g}), got {cfg.s0}")
    step = cfg.velocity * cfg.dt
    n = int(math.ceil((total - cfg.s0) / step - 1e-9)) + 1
    k = np.arange(n)
    t = k * cfg.dt
    s = cfg.s0 + cfg.velocity * t

    half = design.spring_spacing / 2.0
    d_front, sat_front = station_compression(network, design, s + half, cfg)
    d_rear, sat_rear = station_compression(network, design, s - half, cfg)
    compression = np.stack([d_front, d_rear], axis=2)
    saturated = np.stack([sat_front, sat_rear], axis=2)

    per_station = design.springs_per_station * design.spring_stiffness
    station_force = np.maximum(0.0, per_station * (design.preload_compression + compression / 1000.0))
    normal = station_force.sum(axis=2)

    s_center = np.clip(s, 0.0, total)
    seg, _, tc, _, _ = network.sample(s_center, extrapolate=False)
    g_axial = np.clip(tc[:, 2], -1.0, 1.0)

    scale = np.ones((n, design.n_modules))
    for plan in _speed_plans(network, design, cfg.roll):
        mask = seg == plan.segment_index
        scale[mask] = plan.per_module_speed_scale
    share = scale / scale.sum(axis=1, keepdims=True)

    N_total = normal.sum(axis=1)
    axial_load = np.abs(design.mass * (cfg.g * g_axial + cfg.accel)) + cfg.C_R * N_total
    slip = design.mu_static * normal - share * axial_load[:, None]
    tte = (cfg.C_R * N_total + design.mass * cfg.accel + cfg.friction_sign * design.mu_kinetic * N_total
           + design.mass * cfg.g * g_axial)

    n_slip = int(np.count_nonzero((slip < 0).any(axis=1)))
    if n_slip:
        warnings.append(f"slip predicted at {n_slip} of {n} steps (min margin {slip.min():.4f} N)")
    n_sat = int(np.count_nonzero(saturated))
    if n_sat:
        warnings.append(f"spring travel saturated in {n_sat} station samples")

    return TraversalTrace(
        t=t,
        s=s,
        segment=seg,
        compression=compression,
        saturated=saturated,
        station_force=station_force,
        normal_force=normal,
        slip_margin=slip,
        speed_scale=scale,
        gravity_axial=g_axial,
        tractive_effort=tte,
        velocity=cfg.velocity,
        dt=cfg.dt,
        spacing=design.spring_spacing,
        span=design.length,
        bend_bounds=[(a, b) for _, _, a, b in network.bends()],
        r_wheel=design.r_wheel,
        warnings=warnings,
    )


def _first_reach(values: np.ndarray, threshold: float) -> int | None:
    idx = np.flatnonzero(values >= threshold)
    return int(idx[0]) if idx.size else None


def response_delays(trace: TraversalTrace) -> list[float | None]:
    """Per module: time from the front station first reaching 90% of its peak
    compression to the rear station doing the same.  ``None`` without a peak."""
    out = []
    for m in range(trace.compression.shape[1]):
        front = trace.compression[:, m, FRONT]
        rear = trace.compression[:, m, REAR]
        pf, pr = front.max(), rear.max()
        if pf <= 1e-9 or pr <= 1e-9:
            out.append(None)
            continue
        i_f = _first_reach(front, PEAK_FRACTION * pf)
        i_r = _first_reach(rear, PEAK_FRACTION * pr)
        out.append(None if i_f is None or i_r is None else float(trace.t[i_r] - trace.t[i_f]))
    return out


def front_expansion_after_exit(trace: TraversalTrace) -> bool:
    """True when some front station is expanded (negative delta) just after a bend exit."""
    front_s = trace.s + trace.spacing / 2.0
    for _, b in trace.bend_bounds:
        window = (front_s > b) & (front_s <= b + trace.span)
        if np.any(trace.compression[window, :, FRONT] < 0.0):
            return True
    return False


@dataclass(frozen=True)
class SimSummary:
    steps: int
    min_slip_margin: float
    slip_steps: int
    peak_compression: tuple[tuple[float, float], ...]  # per module (front, rear)
    final_compression: tuple[float, ...]  # per module, mean of stations at the last step
    delays: tuple[float | None, ...]
    delay: float | None
    front_expansion: bool
    saturation_events: int
    peak_torque: float | None
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "min_slip_margin": self.min_slip_margin,
            "slip_steps": self.slip_steps,
            "peak_compression": [list(p) for p in self.peak_compression],
            "final_compression": list(self.final_compression),
            "delays": list(self.delays),
            "delay": self.delay,
            "front_expansion": self.front_expansion,
            "saturation_events": self.saturation_events,
            "peak_torque": self.peak_torque,
            "warnings": list(self.warnings),
        }

    def to_text(self) -> str:
        def num(v, p=6, unit=""):
            return "n/a" if v is None else f"{v:.{p}f}{unit}"

        lines = [
            f"steps = {self.steps}",
            f"min_slip_margin = {num(self.min_slip_margin)} N",
            f"slip_steps = {self.slip_steps}",
        ]
        for m, (pf, pr) in enumerate(self.peak_compression):
            lines.append(f"peak_compression.m{m} = front {num(pf)} mm, rear {num(pr)} mm")
        for m, c in enumerate(self.final_compression):
            lines.append(f"final_compression.m{m} = {num(c)} mm")
        lines.append(f"delay = {num(self.delay, 3, ' s')}")
        lines.append(f"front_expansion = {'yes' if self.front_expansion else 'no'}")
        lines.append(f"saturation_events = {self.saturation_events}")
        lines.append(f"peak_torque = {num(self.peak_torque, 6, ' N·m')}")
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines) + "\n"


def summarize(trace: TraversalTrace) -> SimSummary:
    delays = response_delays(trace)
    known = [d for d in delays if d is not None]
    peak_tau = None
    if trace.r_wheel is not None:
        peak_tau = float(trace.tractive_effort.max() * trace.r_wheel)
    return SimSummary(
        steps=len(trace),
        min_slip_margin=float(trace.slip_margin.min()),
        slip_steps=int(np.count_nonzero((trace.slip_margin < 0).any(axis=1))),
        peak_compression=tuple(
            (float(trace.compression[:, m, FRONT].max()), float(trace.compression[:, m, REAR].max()))
            for m in range(trace.compression.shape[1])
        ),
        final_compression=tuple(float(v) for v in trace.compression[-1].mean(axis=1)),
        delays=tuple(delays),
        delay=float(np.mean(known)) if known else None,
        front_expansion=front_expansion_after_exit(trace),
        saturation_events=int(np.count_nonzero(trace.saturated)),
        peak_torque=peak_tau,
        warnings=tuple(trace.warnings),
    )


@dataclass(frozen=True)
class SweepRow:
    stiffness: float
    min_slip_margin: float
    max_compression: float
    saturation_events: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    first_feasible: int | None  # index of the lowest stiffness with min slip margin >= 0

    @property
    def first_feasible_stiffness(self) -> float | None:
        return None if self.first_feasible is None else self.rows[self.first_feasible].stiffness


def stiffness_grid(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive grid ``lo, lo+step, ..., <= hi`` without float drift."""
    if not all(math.isfinite(v) for v in (lo, hi, step)):
        raise ValidationError("stiffness range must be finite")
    if step <= 0:
        raise ValidationError(f"stiffness step must be positive, got {step}")
    if not lo < hi:
        raise ValidationError(f"stiffness range needs lo < hi, got {lo}:{hi}")
    if lo <= 0:
        raise ValidationError(f"stiffness must be positive, got lo={lo}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(count)]


def sweep_stiffness(
    network: PipeNetwork,
    design: RobotDesign,
    cfg: SimConfig | None,
    lo: float,
    hi: float,
    step: float,
) -> SweepResult:
    """Simulate once per grid stiffness and mark the lowest one that never slips."""
    rows = []
    first = None
    for K in stiffness_grid(lo, hi, step):
        trace = simulate(network, replace(design, spring_stiffness=K), cfg)
        margin = float(trace.slip_margin.min())
        rows.append(SweepRow(K, margin, float(trace.compression.max()), int(np.count_nonzero(trace.saturated))))
        if first is None and margin >= 0:
            first = len(rows) - 1
    return SweepResult(tuple(rows), first)
