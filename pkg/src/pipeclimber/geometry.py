"""Pipe cross-sections and arc-length parametrized pipe networks.

A network is an ordered chain of straight and circular-bend segments.  The
centerline carries a parallel-transported frame ``(t, u, l)``: ``t`` is the
pipe axis, ``u`` the local "up" normal and ``l = u x t`` the local "left"
normal.  Bend directions are interpreted in that frame, so a ``left`` bend
followed by an ``up`` bend composes the way a pipe fitter would expect.

World frame: ``z`` points up, gravity points along ``-z``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from .errors import PathRangeError, ScheduleLookupError, ValidationError

MM_PER_INCH = 25.4
SCHEDULES = (40, 80, 120)
DIRECTIONS = ("up", "down", "left", "right")
SCHEDULE_TABLE_ENV = "PIPECLIMBER_SCHEDULE_TABLE"

# Angle of each turn normal in the (u, l) transverse basis, degrees.
DIRECTION_ANGLE = {"up": 0.0, "left": 90.0, "down": 180.0, "right": 270.0}

DEFAULT_INCLINE = 90.0


@dataclass(frozen=True)
class ScheduleRow:
    nps: str
    schedule: int
    od_mm: float
    wall_mm: float

    @property
    def inner_diameter(self) -> float:
        return self.od_mm - 2.0 * self.wall_mm


def parse_schedule_table(text: str) -> dict[tuple[str, int], ScheduleRow]:
    """Parse ``nps schedule od_mm wall_mm`` rows; ``#`` starts a comment."""
    table: dict[tuple[str, int], ScheduleRow] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValidationError(f"schedule table line {lineno}: expected 4 columns, got {len(parts)}")
        nps, sch, od, wall = parts
        try:
            row = ScheduleRow(nps, int(sch), float(od), float(wall))
        except ValueError as exc:
            raise ValidationError(f"schedule table line {lineno}: {exc}") from None
        if row.od_mm <= 0 or row.wall_mm <= 0 or row.inner_diameter <= 0:
            raise ValidationError(f"schedule table line {lineno}: non-physical dimensions")
        table[(row.nps, row.schedule)] = row
    return table


@lru_cache(maxsize=8)
def _load_table(path: str | None) -> dict[tuple[str, int], ScheduleRow]:
    if path is None:
        text = resources.files("pipeclimber").joinpath("data", "astm_d1785.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_schedule_table(text)


def schedule_table(path: str | os.PathLike[str] | None = None) -> dict[tuple[str, int], ScheduleRow]:
    """Return the schedule table, honouring ``PIPECLIMBER_SCHEDULE_TABLE``."""
    if path is None:
        path = os.environ.get(SCHEDULE_TABLE_ENV) or None
    return _load_table(None if path is None else str(path))


@dataclass(frozen=True)
class PipeSpec:
    """Pipe cross-section.  ``nps``/``schedule`` are set for standard pipes."""

    inner_diameter: float
    nps: str | None = None
    schedule: int | None = None
    outer_diameter: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.inner_diameter) and self.inner_diameter > 0):
            raise ValidationError(f"inner diameter must be positive, got {self.inner_diameter}")

    @property
    def is_standard(self) -> bool:
        return self.nps is not None


def resolve_pipe_spec(
    *,
    inner_diameter: float | None = None,
    nps: str | None = None,
    schedule: int | None = None,
    table: dict[tuple[str, int], ScheduleRow] | None = None,
) -> PipeSpec:
    """Build a :class:`PipeSpec` from an explicit diameter or an NPS/schedule pair.

    >>> resolve_pipe_spec(inner_diameter=160).inner_diameter
    160.0
    >>> round(resolve_pipe_spec(nps="6", schedule=40).inner_diameter, 3)
    154.051
    """
    if (inner_diameter is None) == (nps is None):
        raise ValidationError("give exactly one of inner_diameter or nps/schedule")
    if inner_diameter is not None:
        d = float(inner_diameter)
        if not (math.isfinite(d) and d > 0):
            raise ValidationError(f"inner diameter must be positive, got {inner_diameter}")
        return PipeSpec(inner_diameter=d)
    if schedule is None:
        raise ValidationError("standard pipe needs a schedule")
    rows = schedule_table() if table is None else table
    row = rows.get((str(nps), int(schedule)))
    if row is None:
        raise ScheduleLookupError(str(nps), int(schedule))
    return PipeSpec(
        inner_diameter=row.inner_diameter,
        nps=row.nps,
        schedule=row.schedule,
        outer_diameter=row.od_mm,
    )


@dataclass(frozen=True)
class Straight:
    length: float
    incline: float | None = None  # degrees from horizontal; first segment only

    def __post_init__(self) -> None:
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"straight length must be positive, got {self.length}")
        if self.incline is not None and not (-90.0 <= self.incline <= 90.0):
            raise ValidationError(f"incline must lie in [-90, 90], got {self.incline}")

    @property
    def arc_length(self) -> float:
        return self.length


@dataclass(frozen=True)
class Bend:
    angle: float  # degrees, (0, 90]
    radius: float  # centerline radius of curvature, mm
    direction: str

    def __post_init__(self) -> None:
        if not (0.0 < self.angle <= 90.0):
            raise ValidationError(f"bend angle must lie in (0, 90], got {self.angle}")
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValidationError(f"bend radius must be positive, got {self.radius}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"bend direction must be one of {DIRECTIONS}, got {self.direction!r}")

    @property
    def angle_rad(self) -> float:
        return math.radians(self.angle)

    @property
    def arc_length(self) -> float:
        return self.radius * self.angle_rad


PipeSegment = Union[Straight, Bend]


@dataclass(frozen=True)
class Frame:
    position: np.ndarray
    t: np.ndarray
    u: np.ndarray
    l: np.ndarray  # noqa: E741


def initial_frame(incline_deg: float) -> Frame:
    a = math.radians(incline_deg)
    t = np.array([math.cos(a), 0.0, math.sin(a)])
    u = np.array([-math.sin(a), 0.0, math.cos(a)])
    return Frame(np.zeros(3), t, u, np.cross(u, t))


def _turn_normal(direction: str, u: np.ndarray, l: np.ndarray) -> np.ndarray:  # noqa: E741
    return {"up": u, "down": -u, "left": l, "right": -l}[direction]


def _bend_sample(frame: Frame, bend: Bend, arc: np.ndarray):
    """Position and frame at arc lengths ``arc`` (shape (k,)) into a bend."""
    n = _turn_normal(bend.direction, frame.u, frame.l)
    th = (arc / bend.radius)[:, None]
    c, s = np.cos(th), np.sin(th)
    pos = frame.position + bend.radius * (s * frame.t + (1.0 - c) * n)
    t = c * frame.t + s * n
    n_rot = c * n - s * frame.t
    if bend.direction in ("up", "down"):
        sign = 1.0 if bend.direction == "up" else -1.0
        u = sign * n_rot
        l = np.broadcast_to(frame.l, u.shape)  # noqa: E741
    else:
        sign = 1.0 if bend.direction == "left" else -1.0
        l = sign * n_rot  # noqa: E741
        u = np.broadcast_to(frame.u, l.shape)
    return pos, t, u, l


@dataclass(frozen=True)
class PathPose:
    s: float
    segment_index: int
    axis_direction: tuple[float, float, float]
    gravity_axial_component: float
    position: tuple[float, float, float]
    up: tuple[float, float, float]
    left: tuple[float, float, float]


@dataclass(frozen=True)
class PipeNetwork:
    pipe: PipeSpec
    segments: tuple[PipeSegment, ...]
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)
    _frames: tuple[Frame, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValidationError("a network needs at least one segment")
        for i, seg in enumerate(segs):
            if not isinstance(seg, (Straight, Bend)):
                raise ValidationError(f"segment {i} is not a Straight or Bend")
            if i > 0 and isinstance(seg, Straight) and seg.incline is not None:
                raise ValidationError(f"segment {i}: incline is only allowed on the first segment")
        starts = [0.0]
        frames = [initial_frame(self.initial_incline)]
        for seg in segs:
            starts.append(starts[-1] + seg.arc_length)
            frames.append(_segment_end(frames[-1], seg))
        object.__setattr__(self, "_starts", tuple(starts))
        object.__setattr__(self, "_frames", tuple(frames))

    @property
    def initial_incline(self) -> float:
        first = self.segments[0]
        if isinstance(first, Straight) and first.incline is not None:
            return first.incline
        return DEFAULT_INCLINE

    @property
    def total_arc_length(self) -> float:
        return self._starts[-1]

    @property
    def diameter(self) -> float:
        return self.pipe.inner_diameter

    def bends(self) -> Iterator[tuple[int, Bend, float, float]]:
        for i, seg in enumerate(self.segments):
            if isinstance(seg, Bend):
                yield i, seg, self._starts[i], self._starts[i + 1]

    def start_frame(self, index: int) -> Frame:
        return self._frames[index]

    def segment_index_at(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self._starts[1:-1]), s, side="right")
        return idx.astype(int)

    def sample(self, s: np.ndarray, extrapolate: bool = True):
        """Vectorized centerline sample: ``(segment_index, pos, t, u, l)``.

        Positions outside ``[0, total]`` continue along the end tangents when
        ``extrapolate`` is set, otherwise they are clamped.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        total = self.total_arc_length
        if not extrapolate:
            s = np.clip(s, 0.0, total)
        idx = self.segment_index_at(np.clip(s, 0.0, total))
        k = s.shape[0]
        pos = np.empty((k, 3))
        t = np.empty((k, 3))
        u = np.empty((k, 3))
        l = np.empty((k, 3))  # noqa: E741
        for i in np.unique(idx):
            mask = idx == i
            seg = self.segments[i]
            fr = self._frames[i]
            local = s[mask] - self._starts[i]
            if isinstance(seg, Straight):
                pos[mask] = fr.position + local[:, None] * fr.t
                t[mask], u[mask], l[mask] = fr.t, fr.u, fr.l
                continue
            inside = np.clip(local, 0.0, seg.arc_length)
            p, tt, uu, ll = _bend_sample(fr, seg, inside)
            # beyond either end of a bend (only when it is the first/last segment)
            p = p + (local - inside)[:, None] * tt
            pos[mask], t[mask], u[mask], l[mask] = p, tt, uu, ll
        return idx, pos, t, u, l


def _segment_end(frame: Frame, seg: PipeSegment) -> Frame:
    if isinstance(seg, Straight):
        return Frame(frame.position + seg.length * frame.t, frame.t, frame.u, frame.l)
    p, t, u, l = _bend_sample(frame, seg, np.array([seg.arc_length]))  # noqa: E741
    return Frame(p[0], t[0], np.array(u[0]), np.array(l[0]))


def arc_bounds(network: PipeNetwork, segment_index: int) -> tuple[float, float]:
    """Arc-length interval ``(s_start, s_end)`` covered by one segment."""
    if not (0 <= segment_index < len(network.segments)):
        raise PathRangeError(f"segment index {segment_index} outside 0..{len(network.segments) - 1}")
    return network._starts[segment_index], network._starts[segment_index + 1]


def pose_at(network: PipeNetwork, s: float) -> PathPose:
    """Pose of the centerline at arc length ``s`` (mm from the network start)."""
    total = network.total_arc_length
    if not (0.0 <= s <= total):
        raise PathRangeError(f"s = {s} outside [0, {total}]")
    idx, pos, t, u, l = network.sample(np.array([s]), extrapolate=False)  # noqa: E741
    return PathPose(
        s=float(s),
        segment_index=int(idx[0]),
        axis_direction=tuple(float(v) for v in t[0]),
        gravity_axial_component=float(np.clip(t[0, 2], -1.0, 1.0)),
        position=tuple(float(v) for v in pos[0]),
        up=tuple(float(v) for v in u[0]),
        left=tuple(float(v) for v in l[0]),
    )
