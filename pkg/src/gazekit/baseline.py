"""Reactive comparison system: fixed fixations, no plan.

Gaze targets are picked in direct response to events, held for a random
1-5 s, and only preempted by a source of strictly higher rank (moved
object > active speaker > addressee/listening > environment).  The head
always aligns fully with the eyes, so every shift is a head turn.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, List, Optional, Sequence, Tuple

from .core import FRAME_MS, Target, UnknownTargetError, angular_distance, direction_to
from .controller import ControllerConfig, GazeCommand, RobotPose, step
from .events import (
    Event,
    RobotListeningEvent,
    RobotSpeakingEvent,
    TargetMovedEvent,
    UserSpeakingEvent,
    event_duration_ms,
)

FIXATION_MIN_MS = 1000
FIXATION_MAX_MS = 5000


class SourceLevel(IntEnum):
    ENVIRONMENT = 0
    ADDRESSEE = 1
    SPEAKER = 2
    RESPONSIVE = 3


@dataclass
class _Source:
    target: str
    level: SourceLevel
    end_tick: int


class ReactiveSystem:
    """Event-triggered fixations behind the same command interface."""

    def __init__(self, targets: Dict[str, Target], env_id: str, seed: int,
                 controller_config: Optional[ControllerConfig] = None):
        self.targets = targets
        self.env_id = env_id
        self.rng = random.Random(seed)
        self.config = controller_config or ControllerConfig()
        self.current_target = env_id
        self.current_level = SourceLevel.ENVIRONMENT
        self.fixation_deadline = 0
        self.sources: List[_Source] = []
        self.tick_index = 0

    def _draw_fixation_ticks(self) -> int:
        dur_ms = self.rng.uniform(FIXATION_MIN_MS, FIXATION_MAX_MS)
        return max(1, round(dur_ms / FRAME_MS))

    def _fixate(self, target: str, level: SourceLevel) -> None:
        self.current_target = target
        self.current_level = level
        self.fixation_deadline = self.tick_index + self._draw_fixation_ticks()

    def _source_for(self, ev: Event) -> Optional[Tuple[str, SourceLevel]]:
        if isinstance(ev, TargetMovedEvent):
            return ev.target, SourceLevel.RESPONSIVE
        if isinstance(ev, UserSpeakingEvent):
            return ev.speaker, SourceLevel.SPEAKER
        if isinstance(ev, RobotSpeakingEvent) or isinstance(ev, RobotListeningEvent):
            return ev.addressees[0], SourceLevel.ADDRESSEE
        return None

    def _register_sources(self, events: Sequence[Event]) -> List[_Source]:
        fresh = []
        for ev in events:
            picked = self._source_for(ev)
            if picked is None:
                continue
            target, level = picked
            if target not in self.targets:
                raise UnknownTargetError(f"unknown target {target!r}")
            end = self.tick_index + max(1, -(-event_duration_ms(ev) // FRAME_MS))
            src = _Source(target, level, end)
            fresh.append(src)
            self.sources.append(src)
        return fresh

    def _best_active(self) -> Tuple[str, SourceLevel]:
        self.sources = [s for s in self.sources if s.end_tick > self.tick_index
                        and s.target in self.targets]
        best: Optional[_Source] = None
        for s in self.sources:
            if best is None or s.level > best.level:
                best = s
        if best is None:
            return self.env_id, SourceLevel.ENVIRONMENT
        return best.target, best.level

    def tick(self, events: Sequence[Event], pose: RobotPose) -> Tuple[GazeCommand, RobotPose]:
        fresh = self._register_sources(events)
        preempting = [s for s in fresh if s.level > self.current_level]
        if preempting:
            winner = max(preempting, key=lambda s: s.level)
            self._fixate(winner.target, winner.level)
        elif self.tick_index >= self.fixation_deadline or self.current_target not in self.targets:
            target, level = self._best_active()
            self._fixate(target, level)

        gaze = direction_to(self.targets[self.current_target].position)
        new_pose = step(pose, gaze, gaze, self.config)
        error = angular_distance(new_pose.gaze, gaze)
        cmd = GazeCommand(
            tick_index=self.tick_index,
            current_target=self.current_target,
            gaze_direction=gaze,
            head_target=gaze,
            slack=0.0,
            pose_after=new_pose,
            gaze_error_deg=error if error > 1e-9 else 0.0,
        )
        self.tick_index += 1
        return cmd, new_pose
