"""Core data types for the gaze engine.

Targets live in a robot-head-centered frame (x right, y up, z forward,
meters).  Attention is expressed as a rolling plan of priority scores in
[0, 1], one column of scores per target, one row per future 200 ms frame.
Frame 0 is the immediate next time step; absent entries read as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

FRAME_MS = 200
MIN_HORIZON = 10
MAX_HORIZON = 300  # 60 s; writes beyond this are truncated

Point3 = Tuple[float, float, float]


class GazeKitError(Exception):
    """Base class for engine errors."""


class UnknownTargetError(GazeKitError):
    """A target id was used that is not registered."""


class InvalidSpanError(GazeKitError, ValueError):
    """A frame range or priority value was out of bounds."""


class DegeneratePositionError(GazeKitError, ValueError):
    """A position has no defined direction (zero or non-finite vector)."""


class TargetKindError(GazeKitError):
    """An operation was applied to a target of the wrong kind."""


class TargetKind(Enum):
    USER = "user"
    TASK_OBJECT = "task_object"
    ENVIRONMENT = "environment"


@dataclass
class Target:
    """A thing the robot can look at.

    Positions of task objects are mutated while they are dragged; ids are
    stable for the whole session.  Aliases are lowercase keywords used for
    verbal reference matching.
    """

    id: str
    kind: TargetKind
    position: Point3
    label: str = ""
    aliases: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("target id must be nonempty")
        x, y, z = self.position
        if not all(math.isfinite(v) for v in (x, y, z)):
            raise ValueError(f"target {self.id!r}: position must be finite")
        if self.kind in (TargetKind.USER, TargetKind.TASK_OBJECT) and z <= 0:
            raise ValueError(f"target {self.id!r}: must be in front of the robot (z > 0)")
        for a in self.aliases:
            if a != a.lower():
                raise ValueError(f"target {self.id!r}: alias {a!r} must be lowercase")


@dataclass(frozen=True)
class Direction:
    """Yaw/pitch in degrees.  Positive yaw is the robot's left, positive pitch is up."""

    yaw: float
    pitch: float

    def __post_init__(self) -> None:
        if not (-180.0 <= self.yaw <= 180.0):
            raise ValueError(f"yaw {self.yaw} out of [-180, 180]")
        if not (-90.0 <= self.pitch <= 90.0):
            raise ValueError(f"pitch {self.pitch} out of [-90, 90]")


def wrap_degrees(angle: float) -> float:
    """Wrap an angle to [-180, 180]."""
    a = math.fmod(angle + 180.0, 360.0)
    if a < 0:
        a += 360.0
    return a - 180.0


def direction_to(position: Point3) -> Direction:
    """Direction from the robot-head origin to a point.

    Raises DegeneratePositionError for the zero vector, which has no
    direction.
    """
    x, y, z = position
    if not all(math.isfinite(v) for v in (x, y, z)):
        raise DegeneratePositionError(f"non-finite position {position}")
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise DegeneratePositionError("zero vector has no direction")
    yaw = math.degrees(math.atan2(-x, z))
    pitch = math.degrees(math.atan2(y, math.hypot(x, z)))
    return Direction(yaw=yaw, pitch=pitch)


def direction_to_vector(d: Direction) -> Point3:
    """Unit vector for a direction (inverse of vector_to_direction)."""
    yaw = math.radians(d.yaw)
    pitch = math.radians(d.pitch)
    cp = math.cos(pitch)
    return (-cp * math.sin(yaw), math.sin(pitch), cp * math.cos(yaw))


def vector_to_direction(v: Point3) -> Direction:
    x, y, z = v
    n = math.sqrt(x * x + y * y + z * z)
    if n == 0.0:
        raise DegeneratePositionError("zero vector has no direction")
    y_clamped = max(-1.0, min(1.0, y / n))
    return Direction(yaw=math.degrees(math.atan2(-x, z)), pitch=math.degrees(math.asin(y_clamped)))


def _cross(a: Point3, b: Point3) -> Point3:
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def angular_distance(a: Direction, b: Direction) -> float:
    """Great-circle angle between two directions, in degrees."""
    va = direction_to_vector(a)
    vb = direction_to_vector(b)
    dot = sum(p * q for p, q in zip(va, vb))
    cross = _cross(va, vb)
    # atan2 form is stable for nearly parallel and nearly opposite vectors
    return math.degrees(math.atan2(math.sqrt(sum(c * c for c in cross)), dot))


def slerp_direction(a: Direction, b: Direction, t: float) -> Direction:
    """Point on the great-circle arc from a to b, at fraction t of the arc."""
    if t <= 0.0:
        return a
    if t >= 1.0:
        return b
    va = direction_to_vector(a)
    vb = direction_to_vector(b)
    dot = sum(p * q for p, q in zip(va, vb))
    cross = _cross(va, vb)
    omega = math.atan2(math.sqrt(sum(c * c for c in cross)), dot)
    if omega < 1e-9:
        return a
    s = math.sin(omega)
    if s < 1e-9:
        # antipodal: fall back to component interpolation
        return Direction(
            yaw=wrap_degrees(a.yaw + t * wrap_degrees(b.yaw - a.yaw)),
            pitch=a.pitch + t * (b.pitch - a.pitch),
        )
    ka = math.sin((1.0 - t) * omega) / s
    kb = math.sin(t * omega) / s
    v = tuple(ka * p + kb * q for p, q in zip(va, vb))
    return vector_to_direction(v)  # type: ignore[arg-type]


def angular_midpoint(a: Direction, b: Direction) -> Direction:
    return slerp_direction(a, b, 0.5)


def ms_to_frame_span(start_ms: float, end_ms: float) -> Tuple[int, int]:
    """Frame range [j_start, j_end) covering a millisecond interval.

    All frames that overlap the interval are included; negative starts are
    clipped to frame 0.
    """
    j_start = max(0, math.floor(start_ms / FRAME_MS))
    j_end = max(j_start, math.ceil(end_ms / FRAME_MS))
    return j_start, j_end


class GazePlan:
    """Rolling priority plan: one score per registered target per future frame.

    The horizon grows to cover the furthest written frame (capped at
    MAX_HORIZON) and shrinks by one each shift, never below MIN_HORIZON.
    Writes are plain overwrites; the last write wins.
    """

    def __init__(self) -> None:
        self._horizon = MIN_HORIZON
        self._cols: Dict[str, List[float]] = {}

    @property
    def horizon(self) -> int:
        return self._horizon

    @property
    def target_ids(self) -> List[str]:
        return list(self._cols.keys())

    def register(self, target_id: str) -> None:
        if target_id not in self._cols:
            self._cols[target_id] = [0.0] * self._horizon

    def remove(self, target_id: str) -> None:
        self._cols.pop(target_id, None)

    def is_registered(self, target_id: str) -> bool:
        return target_id in self._cols

    def _grow(self, new_horizon: int) -> None:
        new_horizon = min(new_horizon, MAX_HORIZON)
        if new_horizon > self._horizon:
            pad = new_horizon - self._horizon
            for col in self._cols.values():
                col.extend([0.0] * pad)
            self._horizon = new_horizon

    def set_priority(self, target_id: str, j_start: int, j_end: int, p: float) -> None:
        if target_id not in self._cols:
            raise UnknownTargetError(f"unknown target {target_id!r}")
        if j_start < 0 or j_end <= j_start:
            raise InvalidSpanError(f"invalid frame range [{j_start}, {j_end})")
        if not (0.0 <= p <= 1.0):
            raise InvalidSpanError(f"priority {p} out of [0, 1]")
        j_end = min(j_end, MAX_HORIZON)
        if j_start >= j_end:
            return
        self._grow(j_end)
        col = self._cols[target_id]
        for j in range(j_start, j_end):
            col[j] = p

    def get(self, target_id: str, j: int) -> float:
        col = self._cols.get(target_id)
        if col is None or j < 0 or j >= len(col):
            return 0.0
        return col[j]

    def shift(self) -> None:
        """Advance one frame: priorities move one frame closer, the far end reads 0."""
        new_horizon = max(MIN_HORIZON, self._horizon - 1)
        for tid, col in self._cols.items():
            del col[0]
            if len(col) < new_horizon:
                col.append(0.0)
        self._horizon = new_horizon

    def final_targets(
        self,
        env_id: str,
        prev_current: Optional[str] = None,
        frames: int = 10,
    ) -> List[str]:
        """Per-frame winner: the target with the highest priority in each frame.

        A frame whose maximum is 0 falls back to the environment target.
        Nonzero ties prefer the target chosen in the previous frame
        (prev_current seeds frame 0), then the lexicographically smallest id.
        """
        out: List[str] = []
        prev = prev_current
        ids = list(self._cols.keys())
        cols = [self._cols[t] for t in ids]
        h = self._horizon
        for j in range(frames):
            if j >= h:
                out.append(env_id)
                prev = env_id
                continue
            best = 0.0
            for col in cols:
                v = col[j]
                if v > best:
                    best = v
            if best == 0.0:
                choice = env_id
            else:
                tied = [t for t, col in zip(ids, cols) if col[j] == best]
                if prev in tied:
                    choice = prev  # type: ignore[assignment]
                else:
                    choice = min(tied)
            out.append(choice)
            prev = choice
        return out

    def snapshot(self) -> Dict[str, List[float]]:
        """Immutable copy of all columns, for telemetry and tests."""
        return {t: list(col) for t, col in self._cols.items()}

    def columns(self, frames: int = 10) -> Dict[str, List[float]]:
        """First `frames` priorities per target (zero-padded past the horizon)."""
        out: Dict[str, List[float]] = {}
        for t, col in self._cols.items():
            vals = col[:frames]
            if len(vals) < frames:
                vals = vals + [0.0] * (frames - len(vals))
            out[t] = vals
        return out

    def copy(self) -> "GazePlan":
        dup = GazePlan()
        dup._horizon = self._horizon
        dup._cols = {t: list(col) for t, col in self._cols.items()}
        return dup

    def equals(self, other: "GazePlan") -> bool:
        if self._horizon != other._horizon:
            return False
        if set(self._cols) != set(other._cols):
            return False
        return all(self._cols[t] == other._cols[t] for t in self._cols)


def interpolate_waypoints(waypoints: Iterable[Tuple[int, Point3]], t_ms: float) -> Point3:
    """Linear position along a drag trajectory at time t_ms from its onset."""
    pts = list(waypoints)
    if not pts:
        raise ValueError("no waypoints")
    if t_ms <= pts[0][0]:
        return pts[0][1]
    for (t0, p0), (t1, p1) in zip(pts, pts[1:]):
        if t_ms <= t1:
            if t1 == t0:
                return p1
            f = (t_ms - t0) / (t1 - t0)
            return (
                p0[0] + f * (p1[0] - p0[0]),
                p0[1] + f * (p1[1] - p0[1]),
                p0[2] + f * (p1[2] - p0[2]),
            )
    return pts[-1][1]
