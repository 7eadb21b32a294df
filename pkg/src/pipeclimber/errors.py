"""Exception hierarchy shared by all pipeclimber modules."""

from __future__ import annotations


class PipeClimberError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PipeClimberError, ValueError):
    """An input violates a documented precondition."""


class ScheduleLookupError(PipeClimberError, LookupError):
    """A (nps, schedule) pair is missing from the schedule table."""

    def __init__(self, nps: str, schedule: int) -> None:
        self.nps = nps
        self.schedule = schedule
        super().__init__(f"no schedule table entry for NPS {nps} Sch {schedule}")


class PathRangeError(PipeClimberError, IndexError):
    """An arc-length position or segment index lies outside the network."""


class InfeasibleHoldError(PipeClimberError, ValueError):
    """Springs and friction cannot hold the robot statically."""


class InfeasibleGeometryError(PipeClimberError, ValueError):
    """A bend geometry admits no body length for the given diameter."""


class FeasibilityError(PipeClimberError):
    """A design cannot traverse some segment of a network."""

    def __init__(self, segment_index: int, reason: str) -> None:
        self.segment_index = segment_index
        self.reason = reason
        super().__init__(f"segment {segment_index}: {reason}")


class SourceError(PipeClimberError, ValueError):
    """Parse failure with a 1-based position in the source text."""

    def __init__(self, line: int, column: int, expected: str, found: str) -> None:
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}, column {column}: expected {expected}, found {found}")
