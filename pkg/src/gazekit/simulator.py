"""Deterministic scenario runner and trace persistence.

One tick is 200 ms: drain due events, update the plan (or the reactive
fixation), emit a gaze command, record it, roll forward.  Identical
inputs produce byte-identical traces.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .baseline import ReactiveSystem
from .controller import (
    ControllerConfig,
    GazeCommand,
    RobotPose,
    UnreachableGazeError,
    control_tick,
)
from .core import (
    FRAME_MS,
    Direction,
    GazeKitError,
    Target,
    TargetKind,
    interpolate_waypoints,
)
from .events import (
    DEFAULT_ENV_ID,
    DEFAULT_ENV_POSITION,
    EVENT_TYPE_NAMES,
    Event,
    RobotSpeakingEvent,
    Scenario,
    TargetAddEvent,
    TargetMovedEvent,
    TargetRemoveEvent,
    event_duration_ms,
    match_keywords,
)
from .planner import GazePlanner, PlannerConfig

TRACE_SCHEMA_VERSION = 1
RUN_TAIL_MS = 2000

PLANNED = "planned"
REACTIVE = "reactive"


class TraceFormatError(GazeKitError, ValueError):
    """A persisted trace does not match the expected schema."""


@dataclass
class TraceRecord:
    tick_index: int
    t_ms: int
    system: str
    current_target: str
    current_kind: str
    slack: float
    gaze_direction: Tuple[float, float]  # yaw, pitch
    head_direction: Tuple[float, float]
    gaze_error_deg: float = 0.0
    plan_summary: Optional[List[str]] = None
    active_events: List[str] = field(default_factory=list)
    references: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": TRACE_SCHEMA_VERSION,
            "tick_index": self.tick_index,
            "t_ms": self.t_ms,
            "system": self.system,
            "current_target": self.current_target,
            "current_kind": self.current_kind,
            "slack": self.slack,
            "gaze_direction": {"yaw": self.gaze_direction[0], "pitch": self.gaze_direction[1]},
            "head_direction": {"yaw": self.head_direction[0], "pitch": self.head_direction[1]},
            "gaze_error_deg": self.gaze_error_deg,
            "plan_summary": self.plan_summary,
            "active_events": self.active_events,
            "references": self.references,
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TraceRecord":
        if d.get("schema_version") != TRACE_SCHEMA_VERSION:
            raise TraceFormatError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            tick_index=d["tick_index"],
            t_ms=d["t_ms"],
            system=d["system"],
            current_target=d["current_target"],
            current_kind=d["current_kind"],
            slack=d["slack"],
            gaze_direction=(d["gaze_direction"]["yaw"], d["gaze_direction"]["pitch"]),
            head_direction=(d["head_direction"]["yaw"], d["head_direction"]["pitch"]),
            gaze_error_deg=d.get("gaze_error_deg", 0.0),
            plan_summary=d.get("plan_summary"),
            active_events=list(d.get("active_events", [])),
            references=list(d.get("references", [])),
        )


def _prepare_targets(targets: Sequence[Target]) -> Tuple[List[Target], str]:
    """Deep-copy the target list (positions mutate) and locate/add the environment."""
    copied = [copy.deepcopy(t) for t in targets]
    env = [t for t in copied if t.kind == TargetKind.ENVIRONMENT]
    if len(env) > 1:
        raise ValueError("only one environment target allowed")
    if env:
        return copied, env[0].id
    if any(t.id == DEFAULT_ENV_ID for t in copied):
        raise ValueError(f"target id {DEFAULT_ENV_ID!r} is reserved")
    copied.append(Target(id=DEFAULT_ENV_ID, kind=TargetKind.ENVIRONMENT,
                         position=DEFAULT_ENV_POSITION, label="Environment"))
    return copied, DEFAULT_ENV_ID


class PlannedEngine:
    """Tick loop around the planner and controller."""

    system = PLANNED

    def __init__(
        self,
        targets: Sequence[Target],
        seed: int,
        planner_config: Optional[PlannerConfig] = None,
        controller_config: Optional[ControllerConfig] = None,
    ):
        prepared, env_id = _prepare_targets(targets)
        self.planner = GazePlanner(prepared, seed, planner_config)
        self.controller_config = controller_config or ControllerConfig()
        self.controller_config.validate()
        self.pose = RobotPose()
        self.tick_index = 0
        self.last_plan_columns: Dict[str, List[float]] = {}

    @property
    def env_id(self) -> str:
        assert self.planner.env_id is not None
        return self.planner.env_id

    def step(self, events: Sequence[Event] = ()) -> TraceRecord:
        planner = self.planner
        planner.apply_events(events)
        planner.check_intimacy_regulation()

        summary = planner.plan.final_targets(self.env_id, planner.prev_current,
                                             self.controller_config.summary_window)
        current = summary[0]
        if current == self.env_id and planner.prev_current != self.env_id:
            planner.begin_environment_episode()

        tags = [EVENT_TYPE_NAMES[type(ev)] for ev in events]
        try:
            cmd = control_tick(planner.plan, self.pose, planner.targets, self.env_id,
                               planner.prev_current, self.tick_index, self.controller_config)
        except UnreachableGazeError as exc:
            assert exc.command is not None
            cmd = exc.command
            tags.append("reachability_error")
        self.pose = cmd.pose_after

        references = []
        for ev in events:
            if isinstance(ev, RobotSpeakingEvent):
                for target_id, wi in match_keywords(ev.words, planner.task_objects()):
                    w = ev.words[wi]
                    references.append({
                        "target": target_id,
                        "word_start_ms": self.tick_index * FRAME_MS + w.start_ms,
                        "word_end_ms": self.tick_index * FRAME_MS + w.end_ms,
                    })

        record = TraceRecord(
            tick_index=self.tick_index,
            t_ms=self.tick_index * FRAME_MS,
            system=self.system,
            current_target=cmd.current_target,
            current_kind=planner.targets[cmd.current_target].kind.value,
            slack=cmd.slack,
            gaze_direction=(cmd.pose_after.gaze.yaw, cmd.pose_after.gaze.pitch),
            head_direction=(cmd.pose_after.head.yaw, cmd.pose_after.head.pitch),
            gaze_error_deg=cmd.gaze_error_deg,
            plan_summary=list(summary),
            active_events=tags,
            references=references,
        )
        self.last_plan_columns = planner.plan.columns(self.controller_config.summary_window)
        planner.finish_tick(cmd.current_target)
        self.tick_index += 1
        return record

    def plan_columns(self, frames: int = 10) -> Dict[str, List[float]]:
        return self.planner.plan.columns(frames)


class ReactiveEngine:
    """Tick loop around the reactive baseline; shares geometry and kinematics."""

    system = REACTIVE

    def __init__(self, targets: Sequence[Target], seed: int,
                 controller_config: Optional[ControllerConfig] = None):
        prepared, env_id = _prepare_targets(targets)
        self.targets: Dict[str, Target] = {t.id: t for t in prepared}
        self.env_id = env_id
        self.reactive = ReactiveSystem(self.targets, env_id, seed, controller_config)
        self.pose = RobotPose()
        self.tick_index = 0
        self._drags: List[Tuple[str, List[Tuple[int, Any]], int]] = []

    def step(self, events: Sequence[Event] = ()) -> TraceRecord:
        still = []
        for target_id, waypoints, start_tick in self._drags:
            elapsed = (self.tick_index - start_tick) * FRAME_MS
            if target_id in self.targets:
                self.targets[target_id].position = interpolate_waypoints(waypoints, elapsed)
                if elapsed < waypoints[-1][0]:
                    still.append((target_id, waypoints, start_tick))
        self._drags = still

        behavioral = []
        for ev in events:
            if isinstance(ev, TargetAddEvent):
                self.targets[ev.target.id] = copy.deepcopy(ev.target)
            elif isinstance(ev, TargetRemoveEvent):
                self.targets.pop(ev.target, None)
                self._drags = [d for d in self._drags if d[0] != ev.target]
            else:
                behavioral.append(ev)
                if isinstance(ev, TargetMovedEvent):
                    self._drags = [d for d in self._drags if d[0] != ev.target]
                    self._drags.append((ev.target, list(ev.waypoints), self.tick_index))
                    self.targets[ev.target].position = ev.waypoints[0][1]

        cmd, self.pose = self.reactive.tick(behavioral, self.pose)
        record = TraceRecord(
            tick_index=self.tick_index,
            t_ms=self.tick_index * FRAME_MS,
            system=self.system,
            current_target=cmd.current_target,
            current_kind=self.targets[cmd.current_target].kind.value,
            slack=cmd.slack,
            gaze_direction=(cmd.pose_after.gaze.yaw, cmd.pose_after.gaze.pitch),
            head_direction=(cmd.pose_after.head.yaw, cmd.pose_after.head.pitch),
            gaze_error_deg=cmd.gaze_error_deg,
            plan_summary=None,
            active_events=[EVENT_TYPE_NAMES[type(ev)] for ev in events],
            references=[],
        )
        self.tick_index += 1
        return record


def scenario_tick_count(scenario: Scenario) -> int:
    """Ticks to run: through the last event's end plus a 2 s tail."""
    last_end = 0
    for t_ms, ev in scenario.timeline:
        last_end = max(last_end, t_ms + event_duration_ms(ev))
    return math.ceil((last_end + RUN_TAIL_MS) / FRAME_MS)


def make_engine(
    scenario: Scenario,
    system: str = PLANNED,
    seed: Optional[int] = None,
    planner_config: Optional[PlannerConfig] = None,
    controller_config: Optional[ControllerConfig] = None,
) -> Any:
    use_seed = scenario.seed if seed is None else seed
    if system == PLANNED:
        return PlannedEngine(scenario.targets, use_seed, planner_config, controller_config)
    if system == REACTIVE:
        return ReactiveEngine(scenario.targets, use_seed, controller_config)
    raise ValueError(f"unknown system {system!r}")


def run(
    scenario: Scenario,
    system: str = PLANNED,
    seed: Optional[int] = None,
    planner_config: Optional[PlannerConfig] = None,
    controller_config: Optional[ControllerConfig] = None,
    engine: Optional[Any] = None,
) -> List[TraceRecord]:
    """Execute a scenario with either system; deterministic given the seed."""
    if engine is None:
        engine = make_engine(scenario, system, seed, planner_config, controller_config)

    total = scenario_tick_count(scenario)
    pending = list(scenario.timeline)
    idx = 0
    records = []
    for tick in range(total):
        due: List[Event] = []
        while idx < len(pending) and pending[idx][0] // FRAME_MS <= tick:
            due.append(pending[idx][1])
            idx += 1
        records.append(engine.step(due))
    return records


def compare(
    scenario: Scenario,
    seed: Optional[int] = None,
    planner_config: Optional[PlannerConfig] = None,
    controller_config: Optional[ControllerConfig] = None,
) -> Dict[str, Any]:
    """Run both systems on the same scenario and seed, report side by side."""
    from .metrics import compute_metrics

    out: Dict[str, Any] = {"schema_version": TRACE_SCHEMA_VERSION}
    for system in (PLANNED, REACTIVE):
        trace = run(scenario, system, seed, planner_config, controller_config)
        out[system] = compute_metrics(trace).to_dict()
    return out


# --- trace persistence --------------------------------------------------------

def trace_to_lines(records: Sequence[TraceRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def write_trace(path: str, records: Sequence[TraceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(trace_to_lines(records))


def read_trace(path: str) -> List[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for i, line in enumerate(f):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(TraceRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise TraceFormatError(f"line {i + 1}: {exc}") from None
    return records


def diff_traces(a: Sequence[TraceRecord], b: Sequence[TraceRecord]) -> List[str]:
    """Human-readable mismatches between two traces (empty when equal)."""
    problems = []
    if len(a) != len(b):
        problems.append(f"length mismatch: {len(a)} vs {len(b)} ticks")
    for ra, rb in zip(a, b):
        if ra.to_dict() != rb.to_dict():
            problems.append(f"tick {ra.tick_index}: records differ")
        if len(problems) >= 20:
            problems.append("...")
            break
    return problems
