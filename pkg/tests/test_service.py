from __future__ import annotations

import json
import socket
import time

import pytest

from gazekit.service import GazeService, recv_message, send_message
from gazekit.simulator import PLANNED, run
from gazekit.core import FRAME_MS


class Client:
    """Minimal session client for tests."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5.0)
        self.sock.settimeout(5.0)
        self._n = 0

    def send(self, obj):
        send_message(self.sock, obj)

    def recv(self, ignore_heartbeats=True):
        while True:
            msg = recv_message(self.sock)
            if msg is None:
                return None
            if ignore_heartbeats and msg.get("kind") == "heartbeat":
                continue
            return msg

    def request(self, obj):
        self._n += 1
        obj = dict(obj, id=self._n)
        self.send(obj)
        return self._n

    def close(self):
        try:
            self.send({"kind": "close"})
        except OSError:
            pass
        self.sock.close()


@pytest.fixture()
def service():
    svc = GazeService(port=0)
    svc.start()
    yield svc
    svc.stop()


def open_stepped(service, scenario_doc=None, targets=None, seed=0):
    client = Client(service.port)
    msg = {"kind": "open", "mode": "stepped", "seed": seed}
    if scenario_doc is not None:
        msg["scenario"] = scenario_doc
    if targets is not None:
        msg["targets"] = targets
    client.send(msg)
    opened = client.recv()
    assert opened["kind"] == "opened", opened
    return client


def collect_states(client, n):
    states = []
    while len(states) < n:
        msg = client.recv()
        assert msg is not None, "stream ended early"
        if msg["kind"] == "state":
            states.append(msg["payload"])
        else:
            raise AssertionError(f"unexpected message {msg}")
    return states


class TestProtocol:
    def test_framing_round_trip(self):
        a, b = socket.socketpair()
        try:
            send_message(a, {"kind": "state", "payload": {"x": [1, 2, 3]}})
            got = recv_message(b)
            assert got == {"kind": "state", "payload": {"x": [1, 2, 3]}}
        finally:
            a.close()
            b.close()

    def test_first_message_must_open(self, service):
        client = Client(service.port)
        client.send({"kind": "step", "n": 1})
        msg = client.recv()
        assert msg["kind"] == "error"
        client.close()

    def test_malformed_config_rejects_open(self, service):
        client = Client(service.port)
        client.send({"kind": "open", "mode": "stepped", "targets": [],
                     "config": {"p_listening": 1.5}})
        msg = client.recv()
        assert msg["kind"] == "error" and "p_listening" in msg["message"]
        client.close()


class TestSteppedSession:
    def test_scenario_replay_matches_offline_trace(self, service, fig3_scenario):
        import gazekit.events as events_mod

        doc = json.loads(events_mod.serialize_scenario(fig3_scenario))
        offline = run(fig3_scenario, PLANNED)
        client = open_stepped(service, scenario_doc=doc, seed=fig3_scenario.seed)
        client.request({"kind": "step", "n": len(offline)})
        states = collect_states(client, len(offline))
        live_finals = [s["record"]["current_target"] for s in states]
        assert live_finals == [r.current_target for r in offline]
        live_records = [s["record"] for s in states]
        assert live_records == [r.to_dict() for r in offline]
        client.close()

    def test_injected_events_replay_matches_offline_trace(self, service, fig3_scenario):
        from gazekit.events import event_to_dict, target_to_dict

        offline = run(fig3_scenario, PLANNED)
        targets = [target_to_dict(t) for t in fig3_scenario.targets]
        client = open_stepped(service, targets=targets, seed=fig3_scenario.seed)

        by_tick = {}
        for t_ms, ev in fig3_scenario.timeline:
            by_tick.setdefault(t_ms // FRAME_MS, []).append(event_to_dict(t_ms, ev))

        finals = []
        acks = 0
        for tick in range(len(offline)):
            for raw in by_tick.get(tick, []):
                raw = dict(raw)
                del raw["t_ms"]
                client.request({"kind": "inject", "event": raw})
                ack = client.recv()
                assert ack["kind"] == "event_ack"
                assert ack["applies_at_tick"] == tick
                acks += 1
            client.request({"kind": "step", "n": 1})
            state = collect_states(client, 1)[0]
            finals.append(state["record"]["current_target"])
        assert acks == len(fig3_scenario.timeline)
        assert finals == [r.current_target for r in offline]
        client.close()

    def test_states_carry_plan_columns(self, service, fig3_scenario):
        import gazekit.events as events_mod

        doc = json.loads(events_mod.serialize_scenario(fig3_scenario))
        client = open_stepped(service, scenario_doc=doc)
        client.request({"kind": "step", "n": 3})
        states = collect_states(client, 3)
        plan = states[2]["plan"]  # tick 2: the speaking event has been applied
        assert plan["user1"][0] == 0.3
        assert plan["zebra"][1] == 0.9
        client.close()

    def test_bad_injection_leaves_stream_running(self, service):
        client = open_stepped(service, targets=[
            {"id": "u1", "kind": "user", "position": [0, 0, 1.2], "label": "U", "aliases": []}
        ])
        client.request({"kind": "inject",
                        "event": {"type": "user_speaking", "speaker": "ghost",
                                  "duration_ms": 600}})
        err = client.recv()
        assert err["kind"] == "error" and "ghost" in err["message"]
        client.request({"kind": "step", "n": 1})
        state = collect_states(client, 1)[0]
        assert state["record"]["tick_index"] == 0
        client.close()

    def test_config_update_applies_next_tick(self, service):
        client = open_stepped(service, targets=[
            {"id": "u1", "kind": "user", "position": [0, 0, 1.2], "label": "U", "aliases": []}
        ])
        client.request({"kind": "config", "values": {"p_user_speaking": 0.95}})
        ack = client.recv()
        assert ack["kind"] == "config_ack" and ack["applies_at_tick"] == 0
        client.request({"kind": "inject",
                        "event": {"type": "user_speaking", "speaker": "u1",
                                  "duration_ms": 1000}})
        assert client.recv()["kind"] == "event_ack"
        client.request({"kind": "step", "n": 1})
        state = collect_states(client, 1)[0]
        assert state["plan"]["u1"][0] == 0.95
        client.close()

    def test_config_rejections_name_the_field(self, service):
        client = open_stepped(service, targets=[])
        client.request({"kind": "config", "values": {"p_listening": 1.2}})
        err = client.recv()
        assert err["kind"] == "error" and "p_listening" in err["message"]
        client.request({"kind": "config",
                        "values": {"intimacy_min_ms": 6000, "intimacy_max_ms": 4000}})
        err = client.recv()
        assert err["kind"] == "error" and "intimacy" in err["message"]
        client.request({"kind": "config", "values": {"slack_base": 24}})
        assert client.recv()["kind"] == "config_ack"
        client.close()


class TestRealtimeSession:
    def test_states_stream_and_heartbeat(self, service):
        client = Client(service.port)
        client.send({"kind": "open", "mode": "realtime", "seed": 1, "targets": [
            {"id": "u1", "kind": "user", "position": [0, 0, 1.2], "label": "U", "aliases": []}
        ]})
        assert client.recv()["kind"] == "opened"
        states = 0
        heartbeats = 0
        deadline = time.monotonic() + 3.0
        while time.monotonic() < deadline and (states < 3 or heartbeats < 1):
            msg = client.recv(ignore_heartbeats=False)
            if msg is None:
                break
            if msg["kind"] == "state":
                states += 1
            elif msg["kind"] == "heartbeat":
                heartbeats += 1
        assert states >= 3
        assert heartbeats >= 1
        client.close()
