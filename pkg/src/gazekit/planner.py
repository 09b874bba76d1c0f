"""The gaze planner: turns conversation events into priority spans.

Each tick the planner drains its events, writes priority spans into the
rolling plan (speaking, listening, turn yield/hold, referential glances,
responsive joint attention, moved objects), then checks that nobody is
being stared at for longer than the comfortable 3-5 s and breaks such
runs with a short aversion.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, fields
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from .core import (
    FRAME_MS,
    MAX_HORIZON,
    Direction,
    GazePlan,
    GazeKitError,
    Point3,
    Target,
    TargetKind,
    TargetKindError,
    UnknownTargetError,
    direction_to,
    direction_to_vector,
    interpolate_waypoints,
    ms_to_frame_span,
    wrap_degrees,
)
from .events import (
    Event,
    RobotListeningEvent,
    RobotSpeakingEvent,
    TargetAddEvent,
    TargetMovedEvent,
    TargetRemoveEvent,
    UserSpeakingEvent,
    match_keywords,
)

EXECUTED_TAIL_FRAMES = 25  # longest run the intimacy rule can ever allow (5 s)


class ConfigError(GazeKitError, ValueError):
    """A configuration value is out of range or unknown."""


@dataclass
class PlannerConfig:
    """All tunable priorities and timings of the planning rules."""

    p_speaking_addressee: float = 0.3
    p_listening: float = 0.4
    p_user_speaking: float = 0.6
    p_yield: float = 0.9
    p_referential: float = 0.9
    p_moved: float = 1.0
    p_rja_verbal: float = 0.7
    pause_threshold_ms: int = 800
    yield_lead_ms: int = 1000
    hold_lead_ms: int = 2000
    ref_lead_ms: int = 1000
    moved_hold_ms: int = 2000
    rja_delay_ms: int = 200
    rja_hold_ms: int = 800
    intimacy_min_ms: int = 3000
    intimacy_max_ms: int = 5000
    aversion_ms: int = 1000

    def validate(self) -> None:
        for name in ("p_speaking_addressee", "p_listening", "p_user_speaking",
                     "p_yield", "p_referential", "p_moved", "p_rja_verbal"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        for name in ("pause_threshold_ms", "yield_lead_ms", "hold_lead_ms", "ref_lead_ms",
                     "moved_hold_ms", "rja_delay_ms", "rja_hold_ms",
                     "intimacy_min_ms", "intimacy_max_ms", "aversion_ms"):
            v = getattr(self, name)
            if v <= 0:
                raise ConfigError(f"{name} must be > 0, got {v}")
        if self.intimacy_min_ms > self.intimacy_max_ms:
            raise ConfigError("intimacy_min_ms must not exceed intimacy_max_ms")

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def replace(self, overrides: Dict[str, object]) -> "PlannerConfig":
        """New config with overrides applied; unknown keys are rejected."""
        known = set(self.field_names())
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        values = {f: getattr(self, f) for f in known}
        values.update(overrides)  # type: ignore[arg-type]
        cfg = PlannerConfig(**values)  # type: ignore[arg-type]
        cfg.validate()
        return cfg


@dataclass
class AversionInsertion:
    """Bookkeeping record for one inserted intimacy aversion."""

    tick: int
    target: str
    start_frame: int
    frames: int


@dataclass
class _ActiveDrag:
    target: str
    waypoints: List[Tuple[int, Point3]]
    start_tick: int


class GazePlanner:
    """Owns the rolling plan and the target registry for one session.

    Single-owner object: only the tick loop mutates it.  All randomness
    (intimacy thresholds, environment aversion points) comes from one
    seeded generator, so a session is a pure function of its inputs.
    """

    def __init__(self, targets: Sequence[Target], seed: int, config: Optional[PlannerConfig] = None):
        self.config = config or PlannerConfig()
        self.config.validate()
        self.rng = random.Random(seed)
        self.plan = GazePlan()
        self.targets: Dict[str, Target] = {}
        self.env_id: Optional[str] = None
        for t in targets:
            self._register(t)
        if self.env_id is None:
            raise ValueError("planner needs an environment target")
        self.active_addressees: List[str] = []
        self.executed_tail: Deque[str] = deque(maxlen=EXECUTED_TAIL_FRAMES)
        self.env_anchor: Point3 = self.targets[self.env_id].position
        self.tick_index = 0
        self.aversion_log: List[AversionInsertion] = []
        self._drags: List[_ActiveDrag] = []
        self._run_thresholds: Dict[Tuple[str, int], float] = {}

    # --- registry ---------------------------------------------------------

    def _register(self, target: Target) -> None:
        if target.id in self.targets:
            raise ValueError(f"duplicate target {target.id!r}")
        if target.kind == TargetKind.ENVIRONMENT:
            if self.env_id is not None:
                raise ValueError("only one environment target allowed")
            self.env_id = target.id
        self.targets[target.id] = target
        self.plan.register(target.id)

    def _remove(self, target_id: str) -> None:
        if target_id not in self.targets:
            raise UnknownTargetError(f"unknown target {target_id!r}")
        if target_id == self.env_id:
            raise TargetKindError("cannot remove the environment target")
        del self.targets[target_id]
        self.plan.remove(target_id)
        self._drags = [d for d in self._drags if d.target != target_id]

    def _require(self, target_id: str, kind: Optional[TargetKind] = None) -> Target:
        t = self.targets.get(target_id)
        if t is None:
            raise UnknownTargetError(f"unknown target {target_id!r}")
        if kind is not None and t.kind != kind:
            raise TargetKindError(f"target {target_id!r} is not a {kind.value}")
        return t

    def task_objects(self) -> List[Target]:
        return [t for t in self.targets.values() if t.kind == TargetKind.TASK_OBJECT]

    def user_ids(self) -> List[str]:
        return [t.id for t in self.targets.values() if t.kind == TargetKind.USER]

    # --- tick entry points --------------------------------------------------

    def apply_events(self, new_events: Sequence[Event]) -> None:
        """Lifecycle changes first, then the rule handlers in event order.

        A handler that rejects its event leaves the plan untouched for
        that event; earlier events of the same tick keep their writes.
        """
        self._advance_drags()
        for ev in new_events:
            if isinstance(ev, TargetAddEvent):
                self._register(ev.target)
            elif isinstance(ev, TargetRemoveEvent):
                self._remove(ev.target)
        for ev in new_events:
            if isinstance(ev, RobotSpeakingEvent):
                self.on_robot_speaking(ev)
            elif isinstance(ev, RobotListeningEvent):
                self.on_robot_listening(ev)
            elif isinstance(ev, UserSpeakingEvent):
                self.on_user_speaking(ev)
            elif isinstance(ev, TargetMovedEvent):
                self.on_target_moved(ev)

    def finish_tick(self, executed_target: str) -> None:
        """Record the executed choice and roll the plan one frame forward."""
        self.executed_tail.append(executed_target)
        self.plan.shift()
        self.tick_index += 1

    @property
    def prev_current(self) -> Optional[str]:
        return self.executed_tail[-1] if self.executed_tail else None

    # --- event handlers -----------------------------------------------------

    def on_robot_speaking(self, ev: RobotSpeakingEvent) -> None:
        """Mutual gaze at the addressees, gaze aversion over long pauses,
        a turn cue at the end, and referential glances at mentioned objects.

        Later writes overwrite earlier ones, so a reference shortly before
        a mentioned word wins over the base speaking span.
        """
        cfg = self.config
        for a in ev.addressees:
            self._require(a, TargetKind.USER)
        dur = ev.duration_ms
        j0, j1 = ms_to_frame_span(0, dur)
        for a in ev.addressees:
            self.plan.set_priority(a, j0, j1, cfg.p_speaking_addressee)
        # pauses: look away while holding the floor mid-utterance
        for w, nxt in zip(ev.words, ev.words[1:]):
            gap = nxt.start_ms - w.end_ms
            if gap > cfg.pause_threshold_ms:
                g0, g1 = ms_to_frame_span(w.end_ms, nxt.start_ms)
                for a in ev.addressees:
                    self.plan.set_priority(a, g0, g1, 0.0)
        # turn cue over the tail of the utterance
        if ev.yielding:
            y0, y1 = ms_to_frame_span(max(0, dur - cfg.yield_lead_ms), dur)
            for a in ev.addressees:
                self.plan.set_priority(a, y0, y1, cfg.p_yield)
        else:
            h0, h1 = ms_to_frame_span(max(0, dur - cfg.hold_lead_ms), dur)
            for a in ev.addressees:
                self.plan.set_priority(a, h0, h1, 0.0)
        # referential gaze: reach the referent ahead of the word
        for target_id, wi in match_keywords(ev.words, self.task_objects()):
            w = ev.words[wi]
            r0, r1 = ms_to_frame_span(w.start_ms - cfg.ref_lead_ms, w.end_ms)
            self.plan.set_priority(target_id, r0, r1, cfg.p_referential)
        self.active_addressees = list(ev.addressees)

    def on_robot_listening(self, ev: RobotListeningEvent) -> None:
        for a in ev.addressees:
            self._require(a, TargetKind.USER)
        j0, j1 = ms_to_frame_span(0, ev.duration_ms)
        for a in ev.addressees:
            self.plan.set_priority(a, j0, j1, self.config.p_listening)
        self.active_addressees = list(ev.addressees)

    def on_user_speaking(self, ev: UserSpeakingEvent) -> None:
        """Attend the speaker; glance at objects they mention shortly after
        each reference is recognized (the end of the recognized word)."""
        cfg = self.config
        self._require(ev.speaker, TargetKind.USER)
        j0, j1 = ms_to_frame_span(0, ev.duration_ms)
        self.plan.set_priority(ev.speaker, j0, j1, cfg.p_user_speaking)
        for target_id, wi in match_keywords(ev.recognized_words, self.task_objects()):
            heard_ms = ev.recognized_words[wi].end_ms
            r0, r1 = ms_to_frame_span(heard_ms + cfg.rja_delay_ms,
                                      heard_ms + cfg.rja_delay_ms + cfg.rja_hold_ms)
            self.plan.set_priority(target_id, r0, r1, cfg.p_rja_verbal)
        self.active_addressees = [ev.speaker]

    def on_target_moved(self, ev: TargetMovedEvent) -> None:
        self._require(ev.target, TargetKind.TASK_OBJECT)
        j0, j1 = ms_to_frame_span(0, self.config.moved_hold_ms)
        self.plan.set_priority(ev.target, j0, j1, self.config.p_moved)
        self._drags = [d for d in self._drags if d.target != ev.target]
        self._drags.append(_ActiveDrag(ev.target, list(ev.waypoints), self.tick_index))
        self.targets[ev.target].position = ev.waypoints[0][1]

    def _advance_drags(self) -> None:
        """Move dragged objects along their waypoints at tick granularity."""
        still_active = []
        for d in self._drags:
            elapsed = (self.tick_index - d.start_tick) * FRAME_MS
            self.targets[d.target].position = interpolate_waypoints(d.waypoints, elapsed)
            if elapsed < d.waypoints[-1][0]:
                still_active.append(d)
        self._drags = still_active

    # --- intimacy regulation --------------------------------------------------

    def check_intimacy_regulation(self) -> None:
        """Break overlong stretches of staring at one user.

        Prospective final targets over the whole horizon are glued to the
        recently executed ones; any single-user run that would exceed its
        3-5 s comfort threshold gets a 1 s zero-priority aversion starting
        at the frame where the threshold is crossed.  Thresholds are drawn
        once per run and kept while the run lasts, so re-checks on later
        ticks are consistent.
        """
        assert self.env_id is not None
        cfg = self.config
        aversion_frames = max(1, round(cfg.aversion_ms / FRAME_MS))
        users = set(self.user_ids())
        seen_keys = set()
        for _ in range(5):
            finals = self.plan.final_targets(self.env_id, self.prev_current, self.plan.horizon)
            violation = None
            for run_target, exec_frames, plan_start, plan_end in _user_runs(
                list(self.executed_tail), finals, users
            ):
                # identity of the run: owner plus the absolute tick it started
                run_start_tick = self.tick_index + plan_start - exec_frames
                key = (run_target, run_start_tick)
                seen_keys.add(key)
                if key not in self._run_thresholds:
                    self._run_thresholds[key] = self.rng.uniform(cfg.intimacy_min_ms, cfg.intimacy_max_ms)
                threshold = self._run_thresholds[key]
                total_ms = (exec_frames + (plan_end - plan_start)) * FRAME_MS
                if total_ms > threshold:
                    crossing = _crossing_frame(exec_frames, plan_start, threshold)
                    violation = (run_target, crossing)
                    break
            if violation is None:
                break
            target_id, start = violation
            self.plan.set_priority(target_id, start, start + aversion_frames, 0.0)
            written = min(start + aversion_frames, MAX_HORIZON) - start
            self.aversion_log.append(AversionInsertion(self.tick_index, target_id, start, written))
        self._run_thresholds = {k: v for k, v in self._run_thresholds.items() if k in seen_keys}

    # --- environment sampling --------------------------------------------------

    def sample_environment(self, addressee_id: str) -> Point3:
        """Pick a spot near the addressed user's face to gaze at while averting.

        Yaw offset magnitude is 8-15 degrees to either side, pitch offset
        -10..+5 degrees, at the addressee's distance.
        """
        addressee = self._require(addressee_id, TargetKind.USER)
        face = direction_to(addressee.position)
        yaw_off = self.rng.uniform(8.0, 15.0) * (1 if self.rng.random() < 0.5 else -1)
        pitch_off = self.rng.uniform(-10.0, 5.0)
        d = Direction(
            yaw=wrap_degrees(face.yaw + yaw_off),
            pitch=max(-90.0, min(90.0, face.pitch + pitch_off)),
        )
        dist = math.sqrt(sum(c * c for c in addressee.position))
        v = direction_to_vector(d)
        return (v[0] * dist, v[1] * dist, v[2] * dist)

    def begin_environment_episode(self) -> None:
        """Resample the aversion anchor; held constant until the episode ends."""
        assert self.env_id is not None
        addressee = self._pick_addressee()
        if addressee is not None:
            self.env_anchor = self.sample_environment(addressee)
        self.targets[self.env_id].position = self.env_anchor

    def _pick_addressee(self) -> Optional[str]:
        for a in self.active_addressees:
            t = self.targets.get(a)
            if t is not None and t.kind == TargetKind.USER:
                return a
        users = self.user_ids()
        return users[0] if users else None


def _user_runs(
    executed: List[str], prospective: List[str], users: set
) -> List[Tuple[str, int, int, int]]:
    """Contiguous single-user runs in executed + prospective final targets.

    Yields (target, executed frame count, plan start frame, plan end frame)
    for every run that touches the plan, in chronological order.
    """
    runs: List[Tuple[str, int, int, int]] = []
    exec_frames = 0
    if executed and executed[-1] in users:
        tail_target = executed[-1]
        i = len(executed) - 1
        while i >= 0 and executed[i] == tail_target:
            exec_frames += 1
            i -= 1
    else:
        tail_target = None

    j = 0
    n = len(prospective)
    while j < n:
        t = prospective[j]
        if t not in users:
            j += 1
            continue
        start = j
        while j < n and prospective[j] == t:
            j += 1
        carried = exec_frames if (start == 0 and t == tail_target) else 0
        runs.append((t, carried, start, j))
    return runs


def _crossing_frame(exec_frames: int, plan_start: int, threshold_ms: float) -> int:
    """First plan frame at which the run's cumulative time exceeds the threshold.

    Cumulative time through plan frame f is (exec_frames + f - plan_start + 1)
    frames; the crossing is the first f where that strictly exceeds the
    threshold.
    """
    m_min = max(1, math.floor(threshold_ms / FRAME_MS - exec_frames) + 1)
    return plan_start + m_min - 1
