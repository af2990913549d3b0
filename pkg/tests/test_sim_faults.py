"""Fault injection and preemption behavior of the tick engine."""

from __future__ import annotations

import math

import pytest

from opengo.sim.core import (
    COLLISION_RADIUS_M,
    DRAIN_FAULT_MULTIPLIER,
    SLIP_MOTION_SCALE,
    SimConfig,
    Simulator,
)
from opengo.sim.model import TICK_HZ, TerrainClass


ROUGH_START = dict(start_x=10.5, start_y=6.25)  # inside the rough patch
FLAT_START = dict(start_x=0.25, start_y=0.25)


class TestSlip:
    def test_scales_motion_on_rough(self) -> None:
        sim = Simulator(SimConfig(**ROUGH_START))
        assert sim.scene_class() is TerrainClass.ROUGH
        sim.inject_fault("slip")
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.ok
        assert outcome.final_state.x == pytest.approx(
            10.5 + SLIP_MOTION_SCALE * 2.0, abs=1e-6
        )

    def test_no_effect_on_flat(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("slip")
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.final_state.x == pytest.approx(2.25, abs=1e-6)

    def test_non_slipping_executor_unaffected(self) -> None:
        sim = Simulator(SimConfig(**ROUGH_START))
        sim.inject_fault("slip")
        outcome = sim.execute_skill("turn", {"angle": 1.0, "rate": 0.5})
        assert outcome.final_state.heading == pytest.approx(1.0, abs=1e-9)

    def test_decided_at_run_start(self) -> None:
        # starts on flat, walks onto rough: the whole run keeps full scale
        sim = Simulator(SimConfig(start_x=9.25, start_y=6.25))
        sim.inject_fault("slip")
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.final_state.x == pytest.approx(11.25, abs=1e-6)


class TestBatteryDrain:
    def test_multiplies_continuous_drain(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("battery_drain")
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        # 4 s at 0.5 %/s, times the fault multiplier
        expected = 100.0 - 4.0 * 0.5 * DRAIN_FAULT_MULTIPLIER
        assert outcome.final_state.battery_pct == pytest.approx(expected, abs=1e-6)

    def test_cleared_fault_stops_extra_drain(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("battery_drain")
        sim.clear_faults()
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.final_state.battery_pct == pytest.approx(98.0, abs=1e-6)

    def test_battery_floors_at_zero(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START, battery_pct=1.0))
        sim.inject_fault("battery_drain")
        outcome = sim.execute_skill("dance", {"duration": 10.0, "tempo": 1.0, "style": 0})
        assert outcome.final_state.battery_pct == 0.0


class TestCollisionAt:
    def test_flag_set_inside_radius(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("collision_at", x=1.25, y=0.25)
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.final_state.collision is True
        # flag latched at the first tick whose pose came within range
        hits = [s for s in outcome.states if s.collision]
        first = hits[0]
        assert math.hypot(first.x - 1.25, first.y - 0.25) <= COLLISION_RADIUS_M + 1e-9

    def test_no_flag_outside_radius(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("collision_at", x=1.25, y=1.0)  # 0.75 m off the path
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.final_state.collision is False


class TestExecutorFail:
    def test_certain_failure_happens_early(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("executor_fail", skill="move_forward", probability=1.0, seed=7)
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.status == "error"
        assert outcome.error_code == "EXECUTOR_FAULT"
        budget = math.ceil(4.0 * TICK_HZ) + 10
        assert outcome.ticks == min(5, budget // 2)

    def test_zero_probability_never_fires(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("executor_fail", skill="move_forward", probability=0.0, seed=7)
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.ok

    def test_only_targets_named_skill(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("executor_fail", skill="turn", probability=1.0, seed=7)
        outcome = sim.execute_skill("move_forward", {"distance": 1.0, "speed": 0.5})
        assert outcome.ok

    def test_seed_gives_reproducible_draws(self) -> None:
        def run_sequence(seed: int) -> list[str]:
            sim = Simulator(SimConfig(**FLAT_START))
            sim.inject_fault("executor_fail", skill="turn", probability=0.5, seed=seed)
            statuses = []
            for _ in range(8):
                outcome = sim.execute_skill("turn", {"angle": 0.2, "rate": 0.5})
                statuses.append(outcome.status)
            return statuses

        assert run_sequence(11) == run_sequence(11)
        # the stream is consumed per attempt, so some draw should differ eventually
        assert any(run_sequence(s) != run_sequence(11) for s in (1, 2, 3, 4, 5))

    def test_matches_skill_id_alias(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.inject_fault("executor_fail", skill="march@v1", probability=1.0, seed=3)
        outcome = sim.execute_skill(
            "move_forward", {"distance": 1.0, "speed": 0.5}, skill_id="march@v1"
        )
        assert outcome.error_code == "EXECUTOR_FAULT"


class TestPreemption:
    def test_estop_from_hook_stops_next_tick(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        seen: list[float] = []

        def tripwire(state) -> None:
            seen.append(state.x)
            if state.x >= 1.0 and not sim.estop_latched:
                sim.trigger_estop()

        sim.add_tick_hook(tripwire)
        outcome = sim.execute_skill("move_forward", {"distance": 3.0, "speed": 0.5})
        assert outcome.status == "error"
        assert outcome.error_code == "PREEMPTED"
        assert outcome.final_state.estop is True
        # hooks run at the end of a tick; the preempt check runs before the
        # next actuation, so no pose advanced past the tick that tripped.
        trip_x = next(x for x in seen if x >= 1.0)
        assert outcome.final_state.x == pytest.approx(trip_x, abs=1e-9)

    def test_trigger_is_idempotent(self) -> None:
        sim = Simulator(SimConfig(**FLAT_START))
        sim.trigger_estop()
        sim.trigger_estop()
        assert sim.estop_latched
        sim.resume()
        assert not sim.estop_latched


def test_unknown_fault_kind_rejected() -> None:
    sim = Simulator(SimConfig(**FLAT_START))
    with pytest.raises(ValueError):
        sim.inject_fault("gremlins")
