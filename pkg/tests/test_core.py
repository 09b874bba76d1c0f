from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazekit.core import (
    MAX_HORIZON,
    MIN_HORIZON,
    DegeneratePositionError,
    Direction,
    GazePlan,
    InvalidSpanError,
    UnknownTargetError,
    angular_distance,
    angular_midpoint,
    direction_to,
    direction_to_vector,
    slerp_direction,
    vector_to_direction,
)
from helpers import brute_force_finals


def make_plan(*target_ids):
    plan = GazePlan()
    for t in target_ids:
        plan.register(t)
    return plan


class TestSetPriority:
    def test_write_then_read(self):
        plan = make_plan("user", "env")
        plan.set_priority("user", 0, 15, 0.3)
        assert plan.get("user", 7) == 0.3
        assert plan.get("user", 14) == 0.3
        assert plan.get("user", 15) == 0.0

    def test_last_write_wins(self):
        plan = make_plan("card", "env")
        plan.set_priority("card", 5, 10, 0.9)
        plan.set_priority("card", 7, 8, 0.0)
        assert plan.get("card", 7) == 0.0
        assert plan.get("card", 6) == 0.9
        assert plan.get("card", 8) == 0.9

    def test_writes_beyond_cap_truncated(self):
        plan = make_plan("user", "env")
        plan.set_priority("user", 0, 400, 0.5)
        assert plan.horizon == MAX_HORIZON
        assert plan.get("user", 299) == 0.5
        assert plan.get("user", 300) == 0.0

    def test_unknown_target_rejected(self):
        plan = make_plan("env")
        with pytest.raises(UnknownTargetError):
            plan.set_priority("ghost", 0, 5, 0.5)

    def test_bad_range_rejected(self):
        plan = make_plan("user", "env")
        with pytest.raises(InvalidSpanError):
            plan.set_priority("user", 5, 5, 0.5)
        with pytest.raises(InvalidSpanError):
            plan.set_priority("user", -1, 5, 0.5)
        with pytest.raises(InvalidSpanError):
            plan.set_priority("user", 0, 5, 1.5)

    def test_horizon_grows_to_cover_write(self):
        plan = make_plan("user", "env")
        assert plan.horizon == MIN_HORIZON
        plan.set_priority("user", 0, 40, 0.3)
        assert plan.horizon == 40


class TestShift:
    def test_span_moves_one_frame(self):
        plan = make_plan("user", "env")
        plan.set_priority("user", 2, 5, 0.3)
        plan.shift()
        assert [plan.get("user", j) for j in range(5)] == [0.0, 0.3, 0.3, 0.3, 0.0]

    def test_empty_plan_stays_empty(self):
        plan = make_plan("user", "env")
        plan.shift()
        assert plan.horizon == MIN_HORIZON
        assert all(plan.get("user", j) == 0.0 for j in range(MIN_HORIZON))

    def test_horizon_never_below_minimum(self):
        plan = make_plan("user", "env")
        for _ in range(30):
            plan.shift()
        assert plan.horizon == MIN_HORIZON

    @given(
        a=st.integers(min_value=1, max_value=40),
        width=st.integers(min_value=1, max_value=20),
        v=st.sampled_from([0.1, 0.3, 0.5, 0.9, 1.0]),
    )
    @settings(max_examples=60)
    def test_shift_commutes_with_writes(self, a, width, v):
        # shifting a written plan equals writing the shifted span on a shifted plan
        p1 = make_plan("t", "env")
        p1.set_priority("t", a, a + width, v)
        p1.shift()

        p2 = make_plan("t", "env")
        p2.shift()
        p2.set_priority("t", a - 1, a - 1 + width, v)
        assert all(p1.get("t", j) == p2.get("t", j) for j in range(a + width + 2))


class TestFinalTargets:
    def test_all_zero_defaults_to_environment(self):
        plan = make_plan("user", "env")
        assert plan.final_targets("env") == ["env"] * 10

    def test_highest_priority_wins(self):
        plan = make_plan("user", "zebra", "env")
        plan.set_priority("user", 0, 10, 0.3)
        plan.set_priority("zebra", 3, 4, 0.9)
        finals = plan.final_targets("env")
        assert finals[3] == "zebra"
        assert finals[2] == "user"

    def test_tie_prefers_previous_frame_choice(self):
        plan = make_plan("userA", "userB", "env")
        plan.set_priority("userA", 1, 3, 0.9)
        plan.set_priority("userB", 2, 3, 0.9)
        finals = plan.final_targets("env")
        assert finals[1] == "userA"
        assert finals[2] == "userA"  # hysteresis on the tie at frame 2

    def test_tie_at_frame_zero_uses_previous_tick(self):
        plan = make_plan("userA", "userB", "env")
        plan.set_priority("userA", 0, 2, 0.9)
        plan.set_priority("userB", 0, 2, 0.9)
        assert plan.final_targets("env", prev_current="userB")[0] == "userB"
        assert plan.final_targets("env", prev_current=None)[0] == "userA"  # lexicographic

    def test_matches_brute_force_on_random_plans(self):
        rng = random.Random(42)
        values = [0.0, 0.3, 0.4, 0.6, 0.7, 0.9, 1.0]
        for _ in range(100):
            ids = [f"t{i}" for i in range(rng.randrange(1, 6))]
            plan = make_plan("env", *ids)
            for t in ids:
                for _ in range(rng.randrange(0, 4)):
                    a = rng.randrange(0, 10)
                    b = rng.randrange(a + 1, 12)
                    plan.set_priority(t, a, b, rng.choice(values))
            prev = rng.choice(ids + [None, "env"])
            assert plan.final_targets("env", prev) == brute_force_finals(
                plan.snapshot(), "env", prev, 10
            )

    def test_fig3_plan_shifts_into_next_event(self):
        # the t0 plan shifted to t1, plus the t1 writes, equals the t1 plan built directly
        p = make_plan("user", "zebra", "env")
        p.set_priority("user", 0, 22, 0.3)
        p.set_priority("user", 12, 17, 0.0)
        p.set_priority("user", 17, 22, 0.9)
        p.set_priority("zebra", 1, 9, 0.9)
        for _ in range(30):
            p.shift()
        p.set_priority("user", 0, 12, 0.6)
        p.set_priority("zebra", 5, 9, 0.7)

        q = make_plan("user", "zebra", "env")
        q.set_priority("user", 0, 12, 0.6)
        q.set_priority("zebra", 5, 9, 0.7)
        assert all(p.get(t, j) == q.get(t, j) for t in ("user", "zebra") for j in range(15))

    @given(st.lists(st.tuples(st.integers(0, 8), st.integers(1, 4),
                              st.sampled_from([0.3, 0.6, 0.9, 1.0])), max_size=6))
    @settings(max_examples=60)
    def test_reads_always_in_unit_interval(self, spans):
        plan = make_plan("a", "b", "env")
        for start, width, v in spans:
            plan.set_priority("a" if width % 2 else "b", start, start + width, v)
        assert all(0.0 <= plan.get(t, j) <= 1.0 for t in ("a", "b") for j in range(15))


class TestDirections:
    def test_straight_ahead(self):
        d = direction_to((0.0, 0.0, 1.0))
        assert d.yaw == pytest.approx(0.0)
        assert d.pitch == pytest.approx(0.0)

    def test_right_is_negative_yaw(self):
        d = direction_to((1.0, 0.0, 1.0))
        assert d.yaw == pytest.approx(-45.0)
        assert d.pitch == pytest.approx(0.0)

    def test_up_is_positive_pitch(self):
        d = direction_to((0.0, 1.0, 1.0))
        assert d.yaw == pytest.approx(0.0)
        assert d.pitch == pytest.approx(45.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegeneratePositionError):
            direction_to((0.0, 0.0, 0.0))

    def test_vector_round_trip(self):
        for yaw, pitch in [(0, 0), (30, 10), (-120, -45), (179, 89), (-45, 0)]:
            d = Direction(float(yaw), float(pitch))
            back = vector_to_direction(direction_to_vector(d))
            assert angular_distance(d, back) < 1e-9

    def test_angular_distance_symmetric(self):
        a, b = Direction(10, 5), Direction(-20, -15)
        assert angular_distance(a, b) == pytest.approx(angular_distance(b, a))
        assert angular_distance(a, a) == pytest.approx(0.0)

    def test_slerp_endpoints_and_midpoint(self):
        a, b = Direction(0, 0), Direction(40, 0)
        assert slerp_direction(a, b, 0.0) == a
        assert slerp_direction(a, b, 1.0) == b
        mid = angular_midpoint(a, b)
        assert mid.yaw == pytest.approx(20.0)
        assert angular_distance(a, mid) == pytest.approx(angular_distance(mid, b))

    def test_slerp_fraction_scales_arc(self):
        a, b = Direction(-10, 20), Direction(35, -5)
        total = angular_distance(a, b)
        p = slerp_direction(a, b, 0.25)
        assert angular_distance(a, p) == pytest.approx(0.25 * total, abs=1e-9)
