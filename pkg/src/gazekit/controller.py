"""The gaze controller: plan summary in, eye and head commands out.

Eyes land on the target instantly; the neck follows at a bounded rate.
How far the head is allowed to lag behind the eyes (the slack) depends on
how long the plan keeps the gaze on the current target: long fixations
align the head fully, quick glances are done with the eyes alone.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence

from .core import (
    Direction,
    GazePlan,
    GazeKitError,
    Target,
    angular_distance,
    angular_midpoint,
    direction_to,
    slerp_direction,
    wrap_degrees,
)
from .planner import ConfigError

EYE_YAW_LIMIT = 50.0
EYE_PITCH_LIMIT = 40.0
TICK_S = 0.2


class UnreachableGazeError(GazeKitError):
    """The target lies outside the eye range even at the commanded head pose.

    Carries the residual angle and the best-effort pose (eyes clamped at
    their limits) so callers can keep going.
    """

    def __init__(self, residual_deg: float, pose: "RobotPose"):
        super().__init__(f"gaze unreachable, residual {residual_deg:.1f} deg")
        self.residual_deg = residual_deg
        self.pose = pose
        self.command: Optional["GazeCommand"] = None  # filled in by control_tick


@dataclass(frozen=True)
class RobotPose:
    """Neck orientation plus eye offset within the head.

    The composed gaze adds eye yaw/pitch onto the head direction; eye
    offsets are limited to +-50 deg yaw and +-40 deg pitch.
    """

    head: Direction = Direction(0.0, 0.0)
    eye_in_head: Direction = Direction(0.0, 0.0)

    @property
    def gaze(self) -> Direction:
        return Direction(
            yaw=wrap_degrees(self.head.yaw + self.eye_in_head.yaw),
            pitch=max(-90.0, min(90.0, self.head.pitch + self.eye_in_head.pitch)),
        )


@dataclass(frozen=True)
class GazeCommand:
    tick_index: int
    current_target: str
    gaze_direction: Direction
    head_target: Direction
    slack: float
    pose_after: RobotPose
    gaze_error_deg: float = 0.0


@dataclass
class ControllerConfig:
    neck_max_speed: float = 120.0  # deg/s
    slack_base: float = 48.0
    slack_step: float = 6.0
    summary_window: int = 10
    rapid_shift_min_alternations: int = 2

    def validate(self) -> None:
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigError(f"{f.name} must be positive")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def replace(self, overrides: Dict[str, object]) -> "ControllerConfig":
        known = set(self.field_names())
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        values = {f: getattr(self, f) for f in known}
        values.update(overrides)  # type: ignore[arg-type]
        cfg = ControllerConfig(**values)  # type: ignore[arg-type]
        cfg.validate()
        return cfg


def same_target_freq(summary: Sequence[str], target: str) -> int:
    """How many of the summarized frames keep the gaze on `target`."""
    return sum(1 for t in summary if t == target)


def slack(freq: int, config: Optional[ControllerConfig] = None) -> float:
    """Allowed head-to-gaze deviation for a given fixation frequency."""
    cfg = config or ControllerConfig()
    return max(cfg.slack_base - cfg.slack_step * freq, 0.0)


def _alternation_returns(summary: Sequence[str]) -> int:
    """Changes in the summary that return to an already-visited target."""
    returns = 0
    seen = set()
    prev: Optional[str] = None
    for t in summary:
        if prev is not None and t != prev and t in seen:
            returns += 1
        seen.add(t)
        prev = t
    return returns


def head_target(
    pose: RobotPose,
    gaze: Direction,
    slack_deg: float,
    summary: Sequence[str],
    directions: Dict[str, Direction],
    config: Optional[ControllerConfig] = None,
) -> Direction:
    """Where the neck should point for this tick.

    With the plan ping-ponging between targets the head parks at the
    midpoint of the current and the next target; otherwise the head stays
    wherever it is while within the slack cone, and moves just enough to
    re-enter it when outside.
    """
    cfg = config or ControllerConfig()
    current = summary[0]
    if len(set(summary)) >= 2 and _alternation_returns(summary) >= cfg.rapid_shift_min_alternations:
        nxt = next((t for t in summary[1:] if t != current), None)
        if nxt is not None and nxt in directions:
            return angular_midpoint(gaze, directions[nxt])
    dist = angular_distance(pose.head, gaze)
    if dist <= slack_deg:
        return pose.head
    # move along the arc toward the gaze, stopping at the slack boundary
    return slerp_direction(gaze, pose.head, slack_deg / dist)


def step(
    pose: RobotPose,
    cmd_head: Direction,
    gaze: Direction,
    config: Optional[ControllerConfig] = None,
    dt: float = TICK_S,
) -> RobotPose:
    """Advance the pose one tick: eyes snap to the gaze, neck rate-limited.

    The eye offset is recomputed against the new head direction so the
    composed gaze stays on target while the head catches up.  Raises
    UnreachableGazeError when the eye limits cannot hold the target even
    with the head at cmd_head; transient clamping while the head is still
    en route is reported on the returned pose's composed gaze instead.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = config or ControllerConfig()
    max_step = cfg.neck_max_speed * dt
    dist = angular_distance(pose.head, cmd_head)
    if dist <= max_step:
        new_head = cmd_head
    else:
        new_head = slerp_direction(pose.head, cmd_head, max_step / dist)
    eye_yaw = wrap_degrees(gaze.yaw - new_head.yaw)
    eye_pitch = gaze.pitch - new_head.pitch
    clamped_yaw = max(-EYE_YAW_LIMIT, min(EYE_YAW_LIMIT, eye_yaw))
    clamped_pitch = max(-EYE_PITCH_LIMIT, min(EYE_PITCH_LIMIT, eye_pitch))
    new_pose = RobotPose(head=new_head, eye_in_head=Direction(clamped_yaw, clamped_pitch))
    if clamped_yaw != eye_yaw or clamped_pitch != eye_pitch:
        at_cmd_yaw = wrap_degrees(gaze.yaw - cmd_head.yaw)
        at_cmd_pitch = gaze.pitch - cmd_head.pitch
        if abs(at_cmd_yaw) > EYE_YAW_LIMIT or abs(at_cmd_pitch) > EYE_PITCH_LIMIT:
            residual = angular_distance(new_pose.gaze, gaze)
            raise UnreachableGazeError(residual, new_pose)
    return new_pose


def control_tick(
    plan: GazePlan,
    pose: RobotPose,
    targets: Dict[str, Target],
    env_id: str,
    prev_current: Optional[str],
    tick_index: int,
    config: Optional[ControllerConfig] = None,
) -> GazeCommand:
    """Summarize the plan and produce this tick's gaze command."""
    cfg = config or ControllerConfig()
    summary = plan.final_targets(env_id, prev_current, cfg.summary_window)
    current = summary[0]
    directions = {tid: direction_to(t.position) for tid, t in targets.items()}
    gaze = directions[current]
    freq = same_target_freq(summary, current)
    slack_deg = slack(freq, cfg)
    cmd_head = head_target(pose, gaze, slack_deg, summary, directions, cfg)
    try:
        new_pose = step(pose, cmd_head, gaze, cfg)
    except UnreachableGazeError as exc:
        exc.command = GazeCommand(
            tick_index=tick_index,
            current_target=current,
            gaze_direction=gaze,
            head_target=cmd_head,
            slack=slack_deg,
            pose_after=exc.pose,
            gaze_error_deg=exc.residual_deg,
        )
        raise
    error = angular_distance(new_pose.gaze, gaze)
    return GazeCommand(
        tick_index=tick_index,
        current_target=current,
        gaze_direction=gaze,
        head_target=cmd_head,
        slack=slack_deg,
        pose_after=new_pose,
        gaze_error_deg=error if error > 1e-9 else 0.0,
    )
