"""Text formats: ``.pcn`` pipe networks, ``.pcr`` robot designs, CSV traces.

Both text formats are line oriented: one directive per line, ``#`` starts a
comment, ``key=value`` pairs in any order after the keyword.  Units are part
of the key names.  An optional ``format=1`` line may precede everything else.

Network::

    pipe inner_diameter=160            # or: pipe nps=6 schedule=40
    segment straight length=500 incline=90
    segment bend angle=90 radius=90 direction=left

Robot::

    robot mass_kg=0.47 length_mm=150 dmax_mm=163.33 dmin_mm=129.54 ...

Every error is a single :class:`SourceError` whose line and column point at
the first offending character.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .design import LugSpec, RobotDesign
from .errors import ScheduleLookupError, SourceError, ValidationError
from .geometry import DIRECTIONS, SCHEDULES, Bend, PipeNetwork, PipeSpec, Straight, resolve_pipe_spec

FORMAT_VERSION = "1"

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"[+-]?\d+\Z")
_TOKEN = re.compile(r"\S+")

TRACE_HEADER = (
    "t,s,seg,m0_front_mm,m0_rear_mm,m1_front_mm,m1_rear_mm,m2_front_mm,m2_rear_mm,"
    "m0_N,m1_N,m2_N,m0_slip_N,m1_slip_N,m2_slip_N,g_axial"
)


@dataclass(frozen=True)
class _Token:
    text: str
    col: int  # 1-based


@dataclass(frozen=True)
class _Pair:
    key: str
    value: str
    key_col: int
    value_col: int


@dataclass(frozen=True)
class _Line:
    number: int
    tokens: tuple[_Token, ...]
    end_col: int  # column just past the last non-comment character


def _split_lines(text: str) -> list[str]:
    return text.replace("\r\n", "\n").replace("\r", "\n").split("\n")


def _directives(text: str) -> tuple[list[_Line], tuple[int, int]]:
    """Non-empty lines as tokens, plus the end-of-input position."""
    raw = _split_lines(text)
    out = []
    for i, line in enumerate(raw, start=1):
        content = line.split("#", 1)[0]
        tokens = tuple(_Token(m.group(), m.start() + 1) for m in _TOKEN.finditer(content))
        if tokens:
            out.append(_Line(i, tokens, len(content.rstrip()) + 1))
    if raw and raw[-1] == "" and len(raw) > 1:
        raw = raw[:-1]
    last = len(raw) if raw else 1
    eof = (max(last, 1), len(raw[-1]) + 1 if raw else 1)
    return out, eof


def _pairs(line: _Line, tokens: Iterable[_Token], allowed: tuple[str, ...]) -> dict[str, _Pair]:
    pairs: dict[str, _Pair] = {}
    for tok in tokens:
        key, sep, value = tok.text.partition("=")
        if not sep or not key:
            raise SourceError(line.number, tok.col, "key=value", repr(tok.text))
        if key not in allowed:
            raise SourceError(line.number, tok.col, "one of " + ", ".join(allowed), repr(key))
        if key in pairs:
            raise SourceError(line.number, tok.col, f"a single {key}=", f"duplicate {key!r}")
        if not value:
            raise SourceError(line.number, tok.col + len(key) + 1, f"a value for {key}", "nothing")
        pairs[key] = _Pair(key, value, tok.col, tok.col + len(key) + 1)
    return pairs


def _require(line: _Line, pairs: dict[str, _Pair], keys: Iterable[str]) -> None:
    for key in keys:
        if key not in pairs:
            raise SourceError(line.number, line.end_col, f"{key}=", "end of line")


def _number(line: _Line, pair: _Pair) -> float:
    if not _NUMBER.match(pair.value):
        raise SourceError(line.number, pair.value_col, f"a number for {pair.key}", repr(pair.value))
    value = float(pair.value)
    if not math.isfinite(value):
        raise SourceError(line.number, pair.value_col, f"a finite number for {pair.key}", repr(pair.value))
    return value


def _integer(line: _Line, pair: _Pair) -> int:
    if not _INTEGER.match(pair.value):
        raise SourceError(line.number, pair.value_col, f"an integer for {pair.key}", repr(pair.value))
    return int(pair.value)


def _range_error(line: _Line, pair: _Pair, expected: str) -> SourceError:
    return SourceError(line.number, pair.value_col, f"{pair.key} {expected}", pair.value)


def _format_header(line: _Line, seen_directive: bool) -> None:
    tok = line.tokens[0]
    if seen_directive:
        raise SourceError(line.number, tok.col, "format=1 only before the first directive", repr(tok.text))
    if len(line.tokens) > 1:
        raise SourceError(line.number, line.tokens[1].col, "end of line", repr(line.tokens[1].text))
    value = tok.text.partition("=")[2]
    if value != FORMAT_VERSION:
        raise SourceError(line.number, tok.col + len("format="), f"format version {FORMAT_VERSION}", repr(value))


def _is_format(line: _Line) -> bool:
    return line.tokens[0].text.startswith("format=")


def _parse_pipe(line: _Line) -> PipeSpec:
    pairs = _pairs(line, line.tokens[1:], ("nps", "schedule", "inner_diameter"))
    if "inner_diameter" in pairs:
        for other in ("nps", "schedule"):
            if other in pairs:
                p = pairs[other]
                raise SourceError(line.number, p.key_col, "either inner_diameter or nps/schedule", repr(other))
        p = pairs["inner_diameter"]
        d = _number(line, p)
        if d <= 0:
            raise _range_error(line, p, "> 0")
        return PipeSpec(inner_diameter=d)
    if not pairs:
        raise SourceError(line.number, line.end_col, "inner_diameter= or nps=", "end of line")
    _require(line, pairs, ("nps", "schedule"))
    sch = pairs["schedule"]
    schedule = _integer(line, sch)
    if schedule not in SCHEDULES:
        raise _range_error(line, sch, "in " + "|".join(str(s) for s in SCHEDULES))
    nps = pairs["nps"]
    try:
        return resolve_pipe_spec(nps=nps.value, schedule=schedule)
    except ScheduleLookupError:
        raise SourceError(line.number, nps.value_col, "an NPS/schedule pair from the schedule table",
                          f"NPS {nps.value} Sch {schedule}") from None


def _parse_segment(line: _Line, first: bool) -> Straight | Bend:
    if len(line.tokens) < 2:
        raise SourceError(line.number, line.end_col, "straight or bend", "end of line")
    kind = line.tokens[1]
    if kind.text == "straight":
        pairs = _pairs(line, line.tokens[2:], ("length", "incline"))
        _require(line, pairs, ("length",))
        length = _number(line, pairs["length"])
        if length <= 0:
            raise _range_error(line, pairs["length"], "> 0")
        incline = None
        if "incline" in pairs:
            p = pairs["incline"]
            if not first:
                raise SourceError(line.number, p.key_col, "incline only on the first segment", "incline")
            incline = _number(line, p)
            if not -90.0 <= incline <= 90.0:
                raise _range_error(line, p, "in [-90, 90]")
        return Straight(length, incline)
    if kind.text == "bend":
        pairs = _pairs(line, line.tokens[2:], ("angle", "radius", "direction"))
        _require(line, pairs, ("angle", "radius", "direction"))
        angle = _number(line, pairs["angle"])
        if not 0.0 < angle <= 90.0:
            raise _range_error(line, pairs["angle"], "in (0, 90]")
        radius = _number(line, pairs["radius"])
        if radius <= 0:
            raise _range_error(line, pairs["radius"], "> 0")
        direction = pairs["direction"]
        if direction.value not in DIRECTIONS:
            raise _range_error(line, direction, "in " + "|".join(DIRECTIONS))
        return Bend(angle, radius, direction.value)
    raise SourceError(line.number, kind.col, "straight or bend", repr(kind.text))


def parse_network(text: str) -> PipeNetwork:
    """Parse ``.pcn`` text into a :class:`PipeNetwork`."""
    lines, eof = _directives(text)
    pipe: PipeSpec | None = None
    segments: list[Straight | Bend] = []
    seen = False
    for line in lines:
        head = line.tokens[0]
        if _is_format(line):
            _format_header(line, seen)
            continue
        seen = True
        if head.text == "pipe":
            if pipe is not None:
                raise SourceError(line.number, head.col, "a single pipe line", "second pipe")
            pipe = _parse_pipe(line)
        elif head.text == "segment":
            if pipe is None:
                raise SourceError(line.number, head.col, "`pipe`", "segment")
            segments.append(_parse_segment(line, first=not segments))
        else:
            expected = "`pipe`" if pipe is None else "`segment`"
            raise SourceError(line.number, head.col, expected, repr(head.text))
    if pipe is None:
        raise SourceError(*eof, "`pipe`", "end of input")
    if not segments:
        raise SourceError(*eof, "`segment`", "end of input")
    return PipeNetwork(pipe, tuple(segments))


ROBOT_KEYS = (
    "mass_kg", "length_mm", "dmax_mm", "dmin_mm", "stiffness_n_per_m", "preload_m",
    "spacing_mm", "mu_s", "mu_k", "r_wheel_m", "lugs", "lugs_contact", "lug_radius_mm",
    "modules", "springs_per_module",
)
ROBOT_REQUIRED = ("mass_kg", "length_mm", "dmax_mm", "dmin_mm", "stiffness_n_per_m", "preload_m", "mu_k")


def _parse_robot(line: _Line) -> RobotDesign:
    pairs = _pairs(line, line.tokens[1:], ROBOT_KEYS)
    _require(line, pairs, ROBOT_REQUIRED)
    v = {k: _number(line, p) for k, p in pairs.items() if k not in ("lugs", "lugs_contact", "modules", "springs_per_module")}
    ints = {k: _integer(line, p) for k, p in pairs.items() if k in ("lugs", "lugs_contact", "modules", "springs_per_module")}

    def bad(key: str, expected: str) -> SourceError:
        return _range_error(line, pairs[key], expected)

    for key in ("mass_kg", "length_mm", "dmax_mm", "dmin_mm", "stiffness_n_per_m", "lug_radius_mm", "r_wheel_m"):
        if key in v and v[key] <= 0:
            raise bad(key, "> 0")
    if v["dmin_mm"] >= v["dmax_mm"]:
        raise bad("dmin_mm", f"< dmax_mm ({pairs['dmax_mm'].value})")
    if v["preload_m"] < 0:
        raise bad("preload_m", ">= 0")
    if not 0 < v["mu_k"] <= 2:
        raise bad("mu_k", "in (0, 2]")
    mu_s = v.get("mu_s", v["mu_k"])
    if "mu_s" in v and not v["mu_k"] <= mu_s <= 2:
        raise bad("mu_s", "in [mu_k, 2]")
    spacing = v.get("spacing_mm", 30.0)
    if not 0 <= spacing < v["length_mm"]:
        key = "spacing_mm" if "spacing_mm" in pairs else "length_mm"
        raise bad(key, "with 0 <= spacing_mm < length_mm")
    lugs = ints.get("lugs", 22)
    if lugs < 1:
        raise bad("lugs", ">= 1")
    contact = ints.get("lugs_contact", 9)
    if not 0 <= contact <= lugs:
        key = "lugs_contact" if "lugs_contact" in pairs else "lugs"
        raise bad(key, "with 0 <= lugs_contact <= lugs")
    modules = ints.get("modules", 3)
    if modules < 1:
        raise bad("modules", ">= 1")
    springs = ints.get("springs_per_module", 4)
    if springs < 2 or springs % 2:
        raise bad("springs_per_module", "a positive even count")
    try:
        return RobotDesign(
            mass=v["mass_kg"],
            length=v["length_mm"],
            d_max=v["dmax_mm"],
            d_min=v["dmin_mm"],
            spring_stiffness=v["stiffness_n_per_m"],
            preload_compression=v["preload_m"],
            mu_kinetic=v["mu_k"],
            mu_static=mu_s,
            spring_spacing=spacing,
            r_wheel=v.get("r_wheel_m"),
            lug=LugSpec(lugs, contact, v.get("lug_radius_mm", 80.0)),
            n_modules=modules,
            springs_per_module=springs,
        )
    except ValidationError as exc:
        raise SourceError(line.number, line.tokens[0].col, "a valid robot design", str(exc)) from None


def parse_design(text: str) -> RobotDesign:
    """Parse ``.pcr`` text into a :class:`RobotDesign`."""
    lines, eof = _directives(text)
    design = None
    seen = False
    for line in lines:
        head = line.tokens[0]
        if _is_format(line):
            _format_header(line, seen)
            continue
        seen = True
        if head.text != "robot":
            raise SourceError(line.number, head.col, "`robot`", repr(head.text))
        if design is not None:
            raise SourceError(line.number, head.col, "a single robot line", "second robot")
        design = _parse_robot(line)
    if design is None:
        raise SourceError(*eof, "`robot`", "end of input")
    return design


def format_number(x: float) -> str:
    """Shortest decimal that round-trips through ``float``."""
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def emit_network(network: PipeNetwork) -> str:
    pipe = network.pipe
    if pipe.is_standard:
        lines = [f"pipe nps={pipe.nps} schedule={pipe.schedule}"]
    else:
        lines = [f"pipe inner_diameter={format_number(pipe.inner_diameter)}"]
    for seg in network.segments:
        if isinstance(seg, Straight):
            line = f"segment straight length={format_number(seg.length)}"
            if seg.incline is not None:
                line += f" incline={format_number(seg.incline)}"
        else:
            line = (f"segment bend angle={format_number(seg.angle)} radius={format_number(seg.radius)} "
                    f"direction={seg.direction}")
        lines.append(line)
    return "\n".join(lines) + "\n"


def emit_design(design: RobotDesign) -> str:
    f = format_number
    parts = [
        "robot",
        f"mass_kg={f(design.mass)}",
        f"length_mm={f(design.length)}",
        f"dmax_mm={f(design.d_max)}",
        f"dmin_mm={f(design.d_min)}",
        f"stiffness_n_per_m={f(design.spring_stiffness)}",
        f"preload_m={f(design.preload_compression)}",
        f"spacing_mm={f(design.spring_spacing)}",
        f"mu_s={f(design.mu_static)}",
        f"mu_k={f(design.mu_kinetic)}",
    ]
    if design.r_wheel is not None:
        parts.append(f"r_wheel_m={f(design.r_wheel)}")
    parts += [
        f"lugs={design.lug.lug_count}",
        f"lugs_contact={design.lug.min_contact_count}",
        f"lug_radius_mm={f(design.lug.lug_radius)}",
    ]
    if design.n_modules != 3:
        parts.append(f"modules={design.n_modules}")
    if design.springs_per_module != 4:
        parts.append(f"springs_per_module={design.springs_per_module}")
    return " ".join(parts) + "\n"


def load_network(path: str | Path) -> PipeNetwork:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def load_design(path: str | Path) -> RobotDesign:
    return parse_design(Path(path).read_text(encoding="utf-8"))


def _cell(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def trace_rows(trace) -> Iterable[str]:
    """CSV lines of a :class:`~pipeclimber.sim.TraversalTrace`, header first."""
    if trace.compression.shape[1] != 3:
        raise ValidationError("the trace CSV layout is defined for three modules")
    yield TRACE_HEADER
    comp = trace.compression.reshape(len(trace), -1)
    for i in range(len(trace)):
        cells = [_cell(trace.t[i]), _cell(trace.s[i]), str(int(trace.segment[i]))]
        cells += [_cell(v) for v in comp[i]]
        cells += [_cell(v) for v in trace.normal_force[i]]
        cells += [_cell(v) for v in trace.slip_margin[i]]
        cells.append(_cell(trace.gravity_axial[i]))
        yield ",".join(cells)


def write_trace_csv(trace, dest: str | Path | IO[str]) -> None:
    """Write the trace CSV; byte-identical for identical traces (LF endings)."""
    text = "\n".join(trace_rows(trace)) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8", newline="\n")
