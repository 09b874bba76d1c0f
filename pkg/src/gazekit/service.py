"""Live session endpoint.

One TCP connection is one session.  Messages both ways are a 4-byte
big-endian length prefix followed by a UTF-8 JSON object.  The client
opens a session (stepped or realtime), injects events, tweaks the
config, and receives one STATE message per executed tick, in order.
Acks and errors are never dropped; STATE frames may be dropped for slow
consumers.
"""

from __future__ import annotations

import json
import queue
import socket
import struct
import threading
import time
from typing import Any, Dict, List, Optional, Tuple

from .controller import ControllerConfig
from .core import GazeKitError, Target, TargetKind
from .events import (
    Event,
    RobotListeningEvent,
    RobotSpeakingEvent,
    Scenario,
    ScenarioValidationError,
    TargetAddEvent,
    TargetMovedEvent,
    TargetRemoveEvent,
    UserSpeakingEvent,
    parse_event,
    parse_scenario,
    serialize_scenario,
)
from .planner import ConfigError, PlannerConfig
from .simulator import FRAME_MS, PlannedEngine, _prepare_targets
from .cli import split_config_overrides
from .events import _parse_target  # scenario-shaped target objects in "open"

PROTOCOL_VERSION = 1
HEARTBEAT_S = 1.0
TICK_S = FRAME_MS / 1000.0
STATE_QUEUE_SIZE = 256
MAX_MESSAGE_BYTES = 8 * 1024 * 1024

_session_counter = 0
_session_counter_lock = threading.Lock()


def _next_session_id() -> str:
    global _session_counter
    with _session_counter_lock:
        _session_counter += 1
        return f"s{_session_counter}"


# --- framing -----------------------------------------------------------------

def send_message(sock: socket.socket, obj: Dict[str, Any]) -> None:
    data = json.dumps(obj, sort_keys=True).encode("utf-8")
    sock.sendall(struct.pack(">I", len(data)) + data)


def _recv_exact(sock: socket.socket, n: int) -> Optional[bytes]:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def recv_message(sock: socket.socket) -> Optional[Dict[str, Any]]:
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    if length > MAX_MESSAGE_BYTES:
        raise ValueError(f"message of {length} bytes exceeds limit")
    body = _recv_exact(sock, length)
    if body is None:
        return None
    return json.loads(body.decode("utf-8"))


# --- session -----------------------------------------------------------------

def _validate_against_registry(ev: Event, targets: Dict[str, Target]) -> None:
    def need(tid: str, kind: Optional[TargetKind] = None) -> None:
        t = targets.get(tid)
        if t is None:
            raise ScenarioValidationError(f"unknown target {tid!r}")
        if kind is not None and t.kind != kind:
            raise ScenarioValidationError(f"target {tid!r} is not a {kind.value}")

    if isinstance(ev, (RobotSpeakingEvent, RobotListeningEvent)):
        for a in ev.addressees:
            need(a, TargetKind.USER)
    elif isinstance(ev, UserSpeakingEvent):
        need(ev.speaker, TargetKind.USER)
    elif isinstance(ev, TargetMovedEvent):
        need(ev.target, TargetKind.TASK_OBJECT)
    elif isinstance(ev, TargetAddEvent):
        if ev.target.id in targets:
            raise ScenarioValidationError(f"target {ev.target.id!r} already exists")
    elif isinstance(ev, TargetRemoveEvent):
        need(ev.target)
        if targets[ev.target].kind == TargetKind.ENVIRONMENT:
            raise ScenarioValidationError("cannot remove the environment target")


class Session:
    """One engine plus its queues; owned by one connection."""

    def __init__(
        self,
        mode: str,
        targets: List[Target],
        seed: int,
        timeline: List[Tuple[int, Event]],
        planner_config: Optional[PlannerConfig],
        controller_config: Optional[ControllerConfig],
    ):
        self.id = _next_session_id()
        self.mode = mode
        self.engine = PlannedEngine(targets, seed, planner_config, controller_config)
        self.timeline = list(timeline)
        self._timeline_idx = 0
        self.lock = threading.Lock()
        self.pending_events: List[Event] = []
        self.pending_config: List[Dict[str, Any]] = []
        self.next_apply_tick = 0
        self.step_credits = queue.Queue()  # type: queue.Queue
        self.outbound: queue.Queue = queue.Queue()
        self.state_backlog = 0
        self.closed = threading.Event()

    # queue helpers ---------------------------------------------------------

    def send(self, obj: Dict[str, Any]) -> None:
        """Reliable send: acks, errors, handshakes, heartbeats."""
        self.outbound.put(obj)

    def send_state(self, obj: Dict[str, Any]) -> None:
        """Best-effort send: drop when the consumer lags far behind."""
        if self.outbound.qsize() >= STATE_QUEUE_SIZE:
            self.state_backlog += 1
            return
        self.outbound.put(obj)

    # client calls ------------------------------------------------------------

    def inject(self, raw_event: Dict[str, Any], msg_id: Any) -> None:
        try:
            users = self.engine.planner.user_ids()
            ev = parse_event(raw_event, users)
            with self.lock:
                _validate_against_registry(ev, self.engine.planner.targets)
                self.pending_events.append(ev)
                applies = self.next_apply_tick
            self.send({"kind": "event_ack", "id": msg_id, "applies_at_tick": applies})
        except (GazeKitError, ValueError) as exc:
            self.send({"kind": "error", "id": msg_id, "message": str(exc)})

    def update_config(self, values: Dict[str, Any], msg_id: Any) -> None:
        try:
            if not isinstance(values, dict):
                raise ConfigError("config values must be an object")
            p_over, c_over = split_config_overrides(values)
            # validate now so rejection precedes queueing
            self.engine.planner.config.replace(p_over)
            self.engine.controller_config.replace(c_over)
            with self.lock:
                self.pending_config.append(values)
                applies = self.next_apply_tick
            self.send({"kind": "config_ack", "id": msg_id, "applies_at_tick": applies})
        except (GazeKitError, ValueError) as exc:
            self.send({"kind": "error", "id": msg_id, "message": str(exc)})

    def request_steps(self, n: int) -> None:
        for _ in range(max(0, int(n))):
            self.step_credits.put(1)

    # engine side ---------------------------------------------------------------

    def _drain_for_tick(self) -> List[Event]:
        with self.lock:
            tick = self.engine.tick_index
            batch: List[Event] = []
            while (self._timeline_idx < len(self.timeline)
                   and self.timeline[self._timeline_idx][0] // FRAME_MS <= tick):
                batch.append(self.timeline[self._timeline_idx][1])
                self._timeline_idx += 1
            batch.extend(self.pending_events)
            self.pending_events = []
            for values in self.pending_config:
                p_over, c_over = split_config_overrides(values)
                self.engine.planner.config = self.engine.planner.config.replace(p_over)
                self.engine.controller_config = self.engine.controller_config.replace(c_over)
            self.pending_config = []
            self.next_apply_tick = tick + 1
            return batch

    def run_one_tick(self) -> None:
        batch = self._drain_for_tick()
        record = self.engine.step(batch)
        self.send_state({
            "kind": "state",
            "payload": {
                "record": record.to_dict(),
                "plan": self.engine.last_plan_columns,
            },
        })

    def engine_loop(self) -> None:
        if self.mode == "stepped":
            while not self.closed.is_set():
                try:
                    self.step_credits.get(timeout=0.1)
                except queue.Empty:
                    continue
                self.run_one_tick()
        else:
            start = time.monotonic()
            k = 0
            while not self.closed.is_set():
                target_t = start + k * TICK_S
                now = time.monotonic()
                if now < target_t:
                    time.sleep(min(target_t - now, 0.05))
                    continue
                self.run_one_tick()
                k += 1


class GazeService:
    """Accepts connections and runs one session per connection."""

    def __init__(self, port: int, host: str = "127.0.0.1",
                 planner_config: Optional[PlannerConfig] = None,
                 controller_config: Optional[ControllerConfig] = None):
        self.planner_config = planner_config
        self.controller_config = controller_config
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, port))
        self._listener.listen(8)
        self.port = self._listener.getsockname()[1]
        self._stopping = threading.Event()
        self._threads: List[threading.Thread] = []

    def serve_forever(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                break
            t = threading.Thread(target=self._handle, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def start(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t

    def stop(self) -> None:
        self._stopping.set()
        try:
            self._listener.close()
        except OSError:
            pass

    # --- connection handling ---------------------------------------------------

    def _open_session(self, msg: Dict[str, Any]) -> Session:
        mode = msg.get("mode", "realtime")
        if mode not in ("stepped", "realtime"):
            raise ScenarioValidationError(f"unknown mode {mode!r}")
        pcfg = self.planner_config or PlannerConfig()
        ccfg = self.controller_config or ControllerConfig()
        overrides = msg.get("config")
        if overrides is not None:
            if not isinstance(overrides, dict):
                raise ConfigError("config must be an object")
            p_over, c_over = split_config_overrides(overrides)
            pcfg = pcfg.replace(p_over)
            ccfg = ccfg.replace(c_over)

        timeline: List[Tuple[int, Event]] = []
        if "scenario" in msg and msg["scenario"] is not None:
            scenario = parse_scenario(json.dumps(msg["scenario"]))
            targets = scenario.targets
            seed = int(msg.get("seed", scenario.seed))
            timeline = scenario.timeline
        else:
            raw_targets = msg.get("targets", [])
            if not isinstance(raw_targets, list):
                raise ScenarioValidationError("targets must be a list")
            targets = [_parse_target(t, f"targets[{i}]") for i, t in enumerate(raw_targets)]
            seed = int(msg.get("seed", 0))
        return Session(mode, list(targets), seed, timeline, pcfg, ccfg)

    def _handle(self, conn: socket.socket) -> None:
        session: Optional[Session] = None
        writer: Optional[threading.Thread] = None
        engine_thread: Optional[threading.Thread] = None
        try:
            msg = recv_message(conn)
            if msg is None:
                return
            if msg.get("kind") != "open":
                send_message(conn, {"kind": "error", "id": msg.get("id"),
                                    "message": "first message must be 'open'"})
                return
            try:
                session = self._open_session(msg)
            except (GazeKitError, ValueError) as exc:
                send_message(conn, {"kind": "error", "id": msg.get("id"), "message": str(exc)})
                return
            send_message(conn, {"kind": "opened", "id": msg.get("id"), "session": session.id,
                                "protocol_version": PROTOCOL_VERSION, "mode": session.mode})

            writer = threading.Thread(target=self._writer_loop, args=(conn, session), daemon=True)
            writer.start()
            engine_thread = threading.Thread(target=session.engine_loop, daemon=True)
            engine_thread.start()

            while not self._stopping.is_set():
                msg = recv_message(conn)
                if msg is None:
                    break
                kind = msg.get("kind")
                if kind == "inject":
                    session.inject(msg.get("event", {}), msg.get("id"))
                elif kind == "config":
                    session.update_config(msg.get("values", {}), msg.get("id"))
                elif kind == "step":
                    if session.mode != "stepped":
                        session.send({"kind": "error", "id": msg.get("id"),
                                      "message": "step only valid in stepped mode"})
                    else:
                        session.request_steps(msg.get("n", 1))
                elif kind == "close":
                    break
                else:
                    session.send({"kind": "error", "id": msg.get("id"),
                                  "message": f"unknown message kind {kind!r}"})
        except (OSError, ValueError, json.JSONDecodeError):
            pass
        finally:
            if session is not None:
                session.closed.set()
            if engine_thread is not None:
                engine_thread.join(timeout=2.0)
            if session is not None:
                session.outbound.put(None)  # unblock the writer
            if writer is not None:
                writer.join(timeout=2.0)
            try:
                conn.close()
            except OSError:
                pass

    def _writer_loop(self, conn: socket.socket, session: Session) -> None:
        next_heartbeat = time.monotonic() + HEARTBEAT_S
        while True:
            timeout = max(0.0, next_heartbeat - time.monotonic())
            try:
                obj = session.outbound.get(timeout=timeout)
            except queue.Empty:
                obj = {"kind": "heartbeat", "t_ms": session.engine.tick_index * FRAME_MS}
                next_heartbeat = time.monotonic() + HEARTBEAT_S
            if obj is None:
                return
            try:
                send_message(conn, obj)
            except OSError:
                session.closed.set()
                return


def serve(port: int, planner_config: Optional[PlannerConfig] = None,
          controller_config: Optional[ControllerConfig] = None) -> None:
    service = GazeService(port, planner_config=planner_config,
                          controller_config=controller_config)
    print(f"gazekit service listening on port {service.port}", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
