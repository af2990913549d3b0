"""Safety assessment purity and the monitor's latch discipline."""

from __future__ import annotations

from opengo.safety import (
    BATTERY_CUTOFF,
    COLLISION,
    CONSTRAINT_RUNTIME_VIOLATION,
    TILT_LIMIT,
    SafetyLimits,
    SafetyMonitor,
    assess,
)
from opengo.sim.core import SimConfig, Simulator
from opengo.sim.model import Posture, RobotState


def state(**kw) -> RobotState:
    defaults = dict(x=1.0, y=1.0, heading=0.0, posture=Posture.STANDING, battery_pct=50.0)
    defaults.update(kw)
    return RobotState(**defaults)


class TestAssess:
    def test_nominal_state_is_safe(self) -> None:
        verdict = assess(state())
        assert verdict.safe and verdict.reasons == ()

    def test_tilt_limit(self) -> None:
        assert assess(state(roll=0.91)).reasons[0].code == TILT_LIMIT
        assert assess(state(pitch=-0.91)).reasons[0].code == TILT_LIMIT
        assert assess(state(roll=0.9)).safe  # boundary is exclusive

    def test_collision_flag(self) -> None:
        assert assess(state(collision=True)).reasons[0].code == COLLISION

    def test_battery_cutoff(self) -> None:
        assert assess(state(battery_pct=4.99)).reasons[0].code == BATTERY_CUTOFF
        assert assess(state(battery_pct=5.0)).safe

    def test_reasons_accumulate(self) -> None:
        verdict = assess(state(roll=2.0, collision=True, battery_pct=1.0))
        assert {r.code for r in verdict.reasons} == {TILT_LIMIT, COLLISION, BATTERY_CUTOFF}

    def test_custom_limits(self) -> None:
        limits = SafetyLimits(tilt_limit_rad=0.1, battery_cutoff_pct=60.0)
        verdict = assess(state(pitch=0.2), limits)
        assert {r.code for r in verdict.reasons} == {TILT_LIMIT, BATTERY_CUTOFF}

    def test_assess_does_not_mutate(self) -> None:
        s = state(collision=True)
        before = s.to_dict()
        assess(s)
        assert s.to_dict() == before


class TestMonitor:
    def test_latches_on_battery_cutoff(self) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25, battery_pct=5.05))
        monitor = SafetyMonitor(sim)
        outcome = sim.execute_skill("move_forward", {"distance": 3.0, "speed": 0.5})
        assert outcome.error_code == "PREEMPTED"
        assert monitor.trips
        assert sim.estop_latched
        first = monitor.trips[0]
        assert first.verdict.reasons[0].code == BATTERY_CUTOFF

    def test_no_actuation_after_trip_tick(self) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25, battery_pct=5.05))
        monitor = SafetyMonitor(sim)
        outcome = sim.execute_skill("move_forward", {"distance": 3.0, "speed": 0.5})
        trip_tick = monitor.trips[0].tick
        # every recorded state past the trip tick is frozen at the trip pose
        tripped = [s for s in outcome.states if s.tick >= trip_tick]
        assert all(s.x == tripped[0].x for s in tripped)

    def test_collision_fault_trips(self) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25))
        monitor = SafetyMonitor(sim)
        sim.inject_fault("collision_at", x=1.0, y=0.25)
        outcome = sim.execute_skill("move_forward", {"distance": 2.0, "speed": 0.5})
        assert outcome.error_code == "PREEMPTED"
        assert any(r.code == COLLISION for t in monitor.trips for r in t.verdict.reasons)

    def test_template_min_battery_enforced_mid_run(self, registry) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25, battery_pct=30.5))
        monitor = SafetyMonitor(sim)
        monitor.watch(registry.lookup("backflip"))
        outcome = sim.execute_skill("backflip", {})
        # burst cost drops below the skill's own 30% floor at the first tick
        assert outcome.error_code == "PREEMPTED"
        codes = {r.code for t in monitor.trips for r in t.verdict.reasons}
        assert CONSTRAINT_RUNTIME_VIOLATION in codes

    def test_unwatched_template_floor_ignored(self, registry) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25, battery_pct=30.5))
        SafetyMonitor(sim)  # no watch()
        outcome = sim.execute_skill("backflip", {})
        assert outcome.ok

    def test_resume_is_an_explicit_operator_action(self) -> None:
        sim = Simulator(SimConfig(start_x=0.25, start_y=0.25, battery_pct=5.05))
        SafetyMonitor(sim)
        sim.execute_skill("move_forward", {"distance": 3.0, "speed": 0.5})
        assert sim.estop_latched
        sim.resume()
        assert not sim.estop_latched
