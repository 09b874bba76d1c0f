"""Conversation events and the scenario file format.

Scenario files stand in for the live TTS / ASR / touchscreen / tracking
feeds: a seed, an initial target list, and a timeline of timestamped
events.  Parsing is strict — unknown fields and dangling target
references are rejected with the offending event index.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .core import GazeKitError, Point3, Target, TargetKind

DEFAULT_ENV_ID = "env"
DEFAULT_ENV_POSITION: Point3 = (0.0, 0.0, 2.0)

_TOKEN_TRIM = re.compile(r"^\W+|\W+$", re.UNICODE)


class ScenarioParseError(GazeKitError, ValueError):
    """Malformed scenario syntax."""


class ScenarioValidationError(GazeKitError, ValueError):
    """Structurally valid JSON that violates a scenario invariant."""


@dataclass(frozen=True)
class WordTiming:
    text: str
    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        if self.end_ms <= self.start_ms:
            raise ValueError(f"word {self.text!r}: end_ms must exceed start_ms")
        if self.start_ms < 0:
            raise ValueError(f"word {self.text!r}: start_ms must be >= 0")


def _check_words(words: Sequence[WordTiming], what: str) -> None:
    for a, b in zip(words, words[1:]):
        if b.start_ms < a.start_ms:
            raise ValueError(f"{what}: words not sorted by start_ms")
        if b.start_ms < a.end_ms:
            raise ValueError(f"{what}: words {a.text!r} and {b.text!r} overlap")


@dataclass
class RobotSpeakingEvent:
    utterance: str
    words: List[WordTiming]
    yielding: bool = False
    addressees: List[str] = field(default_factory=list)

    @property
    def duration_ms(self) -> int:
        return self.words[-1].end_ms if self.words else 0

    def validate(self) -> None:
        if not self.words:
            raise ValueError("robot_speaking: needs at least one word")
        _check_words(self.words, "robot_speaking")
        if not self.addressees:
            raise ValueError("robot_speaking: addressees must be nonempty")
        spoken = [normalize_token(w.text) for w in self.words]
        text = [normalize_token(t) for t in self.utterance.split()]
        if [t for t in text if t] != [w for w in spoken if w]:
            raise ValueError("robot_speaking: words do not cover the utterance tokens")


@dataclass
class RobotListeningEvent:
    addressees: List[str]
    duration_ms: int

    def validate(self) -> None:
        if not self.addressees:
            raise ValueError("robot_listening: addressees must be nonempty")
        if self.duration_ms <= 0:
            raise ValueError("robot_listening: duration_ms must be > 0")


@dataclass
class UserSpeakingEvent:
    speaker: str
    duration_ms: int
    recognized_words: List[WordTiming] = field(default_factory=list)

    def validate(self) -> None:
        if self.duration_ms <= 0:
            raise ValueError("user_speaking: duration_ms must be > 0")
        _check_words(self.recognized_words, "user_speaking")


@dataclass
class TargetMovedEvent:
    target: str
    waypoints: List[Tuple[int, Point3]]

    @property
    def duration_ms(self) -> int:
        return self.waypoints[-1][0] if self.waypoints else 0

    def validate(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("target_moved: needs at least 2 waypoints")
        if self.waypoints[0][0] != 0:
            raise ValueError("target_moved: first waypoint offset must be 0")
        for (a, _), (b, _) in zip(self.waypoints, self.waypoints[1:]):
            if b < a:
                raise ValueError("target_moved: waypoint offsets must be nondecreasing")


@dataclass
class TargetAddEvent:
    target: Target


@dataclass
class TargetRemoveEvent:
    target: str


Event = Union[
    RobotSpeakingEvent,
    RobotListeningEvent,
    UserSpeakingEvent,
    TargetMovedEvent,
    TargetAddEvent,
    TargetRemoveEvent,
]

EVENT_TYPE_NAMES = {
    RobotSpeakingEvent: "robot_speaking",
    RobotListeningEvent: "robot_listening",
    UserSpeakingEvent: "user_speaking",
    TargetMovedEvent: "target_moved",
    TargetAddEvent: "target_add",
    TargetRemoveEvent: "target_remove",
}


def event_duration_ms(ev: Event) -> int:
    """Intrinsic duration of an event (0 for lifecycle events)."""
    if isinstance(ev, (RobotSpeakingEvent, RobotListeningEvent, UserSpeakingEvent)):
        return ev.duration_ms
    if isinstance(ev, TargetMovedEvent):
        return ev.duration_ms
    return 0


@dataclass
class Scenario:
    seed: int
    targets: List[Target]
    timeline: List[Tuple[int, Event]]


def normalize_token(text: str) -> str:
    """Lowercase a token and strip surrounding punctuation."""
    return _TOKEN_TRIM.sub("", text.lower())


def match_keywords(
    words: Sequence[WordTiming], targets: Sequence[Target]
) -> List[Tuple[str, int]]:
    """Whole-token, case-insensitive matches of word texts against target names.

    Each word matches at most one target; when several targets share a
    keyword the first registered one wins.  Returns (target id, word index)
    pairs in word order.
    """
    matches: List[Tuple[str, int]] = []
    for i, w in enumerate(words):
        token = normalize_token(w.text)
        if not token:
            continue
        for t in targets:
            if token == t.label.lower() or token in t.aliases:
                matches.append((t.id, i))
                break
    return matches


# --- JSON parsing -----------------------------------------------------------

def _require_keys(obj: Dict[str, Any], allowed: Sequence[str], required: Sequence[str], where: str) -> None:
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ScenarioValidationError(f"{where}: unknown fields {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioValidationError(f"{where}: missing fields {missing}")


def _parse_position(raw: Any, where: str) -> Point3:
    if not (isinstance(raw, list) and len(raw) == 3 and all(isinstance(v, (int, float)) for v in raw)):
        raise ScenarioValidationError(f"{where}: position must be [x, y, z]")
    return (float(raw[0]), float(raw[1]), float(raw[2]))


def _parse_target(raw: Any, where: str) -> Target:
    if not isinstance(raw, dict):
        raise ScenarioValidationError(f"{where}: target must be an object")
    _require_keys(raw, ["id", "kind", "position", "label", "aliases"], ["id", "kind", "position"], where)
    try:
        kind = TargetKind(raw["kind"])
    except ValueError:
        raise ScenarioValidationError(f"{where}: unknown kind {raw['kind']!r}") from None
    try:
        return Target(
            id=str(raw["id"]),
            kind=kind,
            position=_parse_position(raw["position"], where),
            label=str(raw.get("label", raw["id"])),
            aliases=[str(a) for a in raw.get("aliases", [])],
        )
    except ValueError as exc:
        raise ScenarioValidationError(f"{where}: {exc}") from None


def _parse_words(raw: Any, where: str) -> List[WordTiming]:
    if not isinstance(raw, list):
        raise ScenarioValidationError(f"{where}: words must be a list")
    out = []
    for k, w in enumerate(raw):
        if not isinstance(w, dict):
            raise ScenarioValidationError(f"{where}: word {k} must be an object")
        _require_keys(w, ["text", "start_ms", "end_ms"], ["text", "start_ms", "end_ms"], f"{where} word {k}")
        try:
            out.append(WordTiming(text=str(w["text"]), start_ms=int(w["start_ms"]), end_ms=int(w["end_ms"])))
        except ValueError as exc:
            raise ScenarioValidationError(f"{where}: {exc}") from None
    return out


def _parse_event(raw: Dict[str, Any], index: int, known_users: List[str]) -> Tuple[int, Event]:
    where = f"timeline[{index}]"
    if "type" not in raw or "t_ms" not in raw:
        raise ScenarioValidationError(f"{where}: needs 't_ms' and 'type'")
    t_ms = raw["t_ms"]
    if not isinstance(t_ms, int) or t_ms < 0:
        raise ScenarioValidationError(f"{where}: t_ms must be a nonnegative integer")
    etype = raw["type"]
    try:
        if etype == "robot_speaking":
            _require_keys(raw, ["t_ms", "type", "utterance", "words", "yielding", "addressees"],
                          ["utterance", "words"], where)
            ev: Event = RobotSpeakingEvent(
                utterance=str(raw["utterance"]),
                words=_parse_words(raw["words"], where),
                yielding=bool(raw.get("yielding", False)),
                addressees=[str(a) for a in raw.get("addressees", [])] or list(known_users),
            )
            ev.validate()
        elif etype == "robot_listening":
            _require_keys(raw, ["t_ms", "type", "addressees", "duration_ms"], ["duration_ms"], where)
            ev = RobotListeningEvent(
                addressees=[str(a) for a in raw.get("addressees", [])] or list(known_users),
                duration_ms=int(raw["duration_ms"]),
            )
            ev.validate()
        elif etype == "user_speaking":
            _require_keys(raw, ["t_ms", "type", "speaker", "duration_ms", "recognized_words"],
                          ["speaker", "duration_ms"], where)
            ev = UserSpeakingEvent(
                speaker=str(raw["speaker"]),
                duration_ms=int(raw["duration_ms"]),
                recognized_words=_parse_words(raw.get("recognized_words", []), where),
            )
            ev.validate()
        elif etype == "target_moved":
            _require_keys(raw, ["t_ms", "type", "target", "waypoints"], ["target", "waypoints"], where)
            wps = raw["waypoints"]
            if not isinstance(wps, list):
                raise ScenarioValidationError(f"{where}: waypoints must be a list")
            parsed = []
            for k, wp in enumerate(wps):
                if not (isinstance(wp, list) and len(wp) == 2):
                    raise ScenarioValidationError(f"{where}: waypoint {k} must be [offset_ms, [x,y,z]]")
                parsed.append((int(wp[0]), _parse_position(wp[1], f"{where} waypoint {k}")))
            ev = TargetMovedEvent(target=str(raw["target"]), waypoints=parsed)
            ev.validate()
        elif etype == "target_add":
            _require_keys(raw, ["t_ms", "type", "target"], ["target"], where)
            ev = TargetAddEvent(target=_parse_target(raw["target"], where))
        elif etype == "target_remove":
            _require_keys(raw, ["t_ms", "type", "target"], ["target"], where)
            ev = TargetRemoveEvent(target=str(raw["target"]))
        else:
            raise ScenarioValidationError(f"{where}: unknown event type {etype!r}")
    except ScenarioValidationError:
        raise
    except ValueError as exc:
        raise ScenarioValidationError(f"{where}: {exc}") from None
    return t_ms, ev


def parse_event(raw: Dict[str, Any], known_users: Sequence[str] = ()) -> Event:
    """Parse one timeline-entry-shaped event; t_ms is optional here."""
    if not isinstance(raw, dict):
        raise ScenarioValidationError("event must be an object")
    obj = dict(raw)
    obj.setdefault("t_ms", 0)
    _, ev = _parse_event(obj, 0, list(known_users))
    return ev


def parse_scenario(data: Union[bytes, str]) -> Scenario:
    """Parse and validate a scenario document.

    An ENVIRONMENT pseudo-target is synthesized when the file does not
    declare one.  Referential integrity is checked against the targets
    alive at each event's time (lifecycle events apply in timeline order).
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioValidationError("top level must be an object")
    _require_keys(doc, ["seed", "targets", "timeline"], ["seed", "targets", "timeline"], "scenario")
    if not isinstance(doc["seed"], int):
        raise ScenarioValidationError("seed must be an integer")
    if not isinstance(doc["targets"], list) or not isinstance(doc["timeline"], list):
        raise ScenarioValidationError("targets and timeline must be lists")

    targets = [_parse_target(t, f"targets[{i}]") for i, t in enumerate(doc["targets"])]
    ids = [t.id for t in targets]
    if len(set(ids)) != len(ids):
        raise ScenarioValidationError("duplicate target ids")
    env_targets = [t for t in targets if t.kind == TargetKind.ENVIRONMENT]
    if len(env_targets) > 1:
        raise ScenarioValidationError("at most one environment target allowed")
    if not env_targets:
        if DEFAULT_ENV_ID in ids:
            raise ScenarioValidationError(
                f"target id {DEFAULT_ENV_ID!r} is reserved for the synthesized environment target"
            )
        targets.append(Target(id=DEFAULT_ENV_ID, kind=TargetKind.ENVIRONMENT,
                              position=DEFAULT_ENV_POSITION, label="Environment"))

    users = [t.id for t in targets if t.kind == TargetKind.USER]
    timeline: List[Tuple[int, Event]] = []
    prev_t = 0
    for i, raw in enumerate(doc["timeline"]):
        if not isinstance(raw, dict):
            raise ScenarioValidationError(f"timeline[{i}]: must be an object")
        t_ms, ev = _parse_event(raw, i, users)
        if t_ms < prev_t:
            raise ScenarioValidationError(f"timeline[{i}]: t_ms decreases")
        prev_t = t_ms
        timeline.append((t_ms, ev))

    _check_references(targets, timeline)
    return Scenario(seed=doc["seed"], targets=targets, timeline=timeline)


def _check_references(targets: List[Target], timeline: List[Tuple[int, Event]]) -> None:
    alive: Dict[str, Target] = {t.id: t for t in targets}
    for i, (_, ev) in enumerate(timeline):
        where = f"timeline[{i}]"

        def need(tid: str, kind: Optional[TargetKind] = None) -> None:
            t = alive.get(tid)
            if t is None:
                raise ScenarioValidationError(f"{where}: unknown target {tid!r}")
            if kind is not None and t.kind != kind:
                raise ScenarioValidationError(f"{where}: target {tid!r} is not a {kind.value}")

        if isinstance(ev, RobotSpeakingEvent) or isinstance(ev, RobotListeningEvent):
            for a in ev.addressees:
                need(a, TargetKind.USER)
        elif isinstance(ev, UserSpeakingEvent):
            need(ev.speaker, TargetKind.USER)
        elif isinstance(ev, TargetMovedEvent):
            need(ev.target, TargetKind.TASK_OBJECT)
        elif isinstance(ev, TargetAddEvent):
            if ev.target.id in alive:
                raise ScenarioValidationError(f"{where}: target {ev.target.id!r} already exists")
            if ev.target.kind == TargetKind.ENVIRONMENT:
                raise ScenarioValidationError(f"{where}: cannot add an environment target")
            alive[ev.target.id] = ev.target
        elif isinstance(ev, TargetRemoveEvent):
            need(ev.target)
            if alive[ev.target].kind == TargetKind.ENVIRONMENT:
                raise ScenarioValidationError(f"{where}: cannot remove the environment target")
            del alive[ev.target]


# --- serialization ----------------------------------------------------------

def target_to_dict(t: Target) -> Dict[str, Any]:
    return {
        "id": t.id,
        "kind": t.kind.value,
        "position": list(t.position),
        "label": t.label,
        "aliases": list(t.aliases),
    }


def event_to_dict(t_ms: int, ev: Event) -> Dict[str, Any]:
    d: Dict[str, Any] = {"t_ms": t_ms, "type": EVENT_TYPE_NAMES[type(ev)]}
    if isinstance(ev, RobotSpeakingEvent):
        d.update(
            utterance=ev.utterance,
            words=[{"text": w.text, "start_ms": w.start_ms, "end_ms": w.end_ms} for w in ev.words],
            yielding=ev.yielding,
            addressees=list(ev.addressees),
        )
    elif isinstance(ev, RobotListeningEvent):
        d.update(addressees=list(ev.addressees), duration_ms=ev.duration_ms)
    elif isinstance(ev, UserSpeakingEvent):
        d.update(
            speaker=ev.speaker,
            duration_ms=ev.duration_ms,
            recognized_words=[
                {"text": w.text, "start_ms": w.start_ms, "end_ms": w.end_ms} for w in ev.recognized_words
            ],
        )
    elif isinstance(ev, TargetMovedEvent):
        d.update(target=ev.target, waypoints=[[t, list(p)] for t, p in ev.waypoints])
    elif isinstance(ev, TargetAddEvent):
        d.update(target=target_to_dict(ev.target))
    elif isinstance(ev, TargetRemoveEvent):
        d.update(target=ev.target)
    return d


def serialize_scenario(scenario: Scenario) -> str:
    doc = {
        "seed": scenario.seed,
        "targets": [target_to_dict(t) for t in scenario.targets],
        "timeline": [event_to_dict(t, ev) for t, ev in scenario.timeline],
    }
    return json.dumps(doc, indent=2, sort_keys=False)
