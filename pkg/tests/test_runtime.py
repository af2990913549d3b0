"""The closed loop end to end: plan, precheck, execute, record, learn, replan."""

from __future__ import annotations

import math
import threading
import time

import pytest

from opengo.dispatch.backends import RuleBackend
from opengo.learning import APPROVE
from opengo.memory import HistoryStore
from opengo.runtime import (
    STATUS_COMPLETED,
    STATUS_FAILED,
    STATUS_PREEMPTED,
    STATUS_REFUSED_ESTOP,
    STATUS_REJECTED,
    CoordinationModel,
    RuntimeSettings,
    SessionRuntime,
    Update,
)
from opengo.sim.core import SimConfig, Simulator
from opengo.skills.library import spawn_config


def make_runtime(registry, sink=None, **kw) -> SessionRuntime:
    sim = Simulator(kw.pop("config", spawn_config()))
    return SessionRuntime(registry, sim, update_sink=sink, **kw)


class Collector:
    def __init__(self) -> None:
        self.updates: list[Update] = []

    def __call__(self, update: Update) -> None:
        self.updates.append(update)

    def kinds(self) -> list[str]:
        return [u.kind for u in self.updates]


class TestHappyPath:
    def test_instruction_to_completion(self, registry) -> None:
        sink = Collector()
        rt = make_runtime(registry, sink)
        result = rt.handle_instruction("move 2 meters then turn left", corr_id="c1")
        assert result.status == STATUS_COMPLETED
        assert [s.skill for s in result.plans[0].steps] == ["move_forward", "turn"]
        assert rt.sim.state.x == pytest.approx(2.25, abs=1e-6)
        assert rt.sim.state.heading == pytest.approx(math.pi / 2, abs=1e-9)

    def test_update_stream_shape(self, registry) -> None:
        sink = Collector()
        rt = make_runtime(registry, sink)
        rt.handle_instruction("move 1 m", corr_id="c1")
        assert sink.kinds() == [
            "plan_proposed",
            "step_started",
            "step_completed",
            "plan_done",
            "ask_feedback",
        ]
        assert all(u.corr_id == "c1" for u in sink.updates)

    def test_records_and_learning_written(self, registry) -> None:
        rt = make_runtime(registry)
        result = rt.handle_instruction("move 2 meters")
        assert len(result.records) == 1
        record = result.records[0]
        assert record.ok and record.total_steps == 1
        assert rt.history.for_plan(result.plans[0].plan_id) == result.records
        assert rt.prefs.preference("flat", "move_forward") > 0.5

    def test_plan_status_derivation(self, registry) -> None:
        rt = make_runtime(registry)
        result = rt.handle_instruction("crouch then stand up")
        assert rt.plan_status(result.plans[0].plan_id) == "completed"
        assert rt.plan_status("0" * 16) == "in_progress"

    def test_gibberish_is_rejected_with_findings(self, registry) -> None:
        sink = Collector()
        rt = make_runtime(registry, sink)
        result = rt.handle_instruction("ponder the meaning of fetch")
        assert result.status == STATUS_REJECTED
        assert any(f.code == "EMPTY_PLAN" for f in result.findings)
        done = [u for u in sink.updates if u.kind == "plan_done"]
        assert done[0].payload["status"] == STATUS_REJECTED

    def test_feedback_applies_learning(self, registry) -> None:
        rt = make_runtime(registry)
        result = rt.handle_instruction("move 2 meters")
        before = rt.prefs.preference("flat", "move_forward")
        updates = rt.feedback(result.plans[0].plan_id, APPROVE)
        assert updates
        assert rt.prefs.preference("flat", "move_forward") > before


class TestPrecheck:
    def test_precheck_failure_fails_step_without_actuation(self, registry) -> None:
        # plan validation only state-checks the first step, so "crouch then
        # move" passes the gate; the runtime precheck catches the crouched
        # posture at execution time, before any actuation
        sink = Collector()
        rt = make_runtime(registry, sink)
        start_x = rt.sim.state.x
        result = rt.handle_instruction("crouch then move 1 m")
        assert result.status == STATUS_FAILED
        failed = [r for r in result.records if r.error_code == "PRECHECK_FAILED"]
        assert failed and failed[0].skill == "move_forward"
        assert rt.sim.state.x == start_x

    def test_fresh_instruction_against_bad_posture_is_rejected(self, registry) -> None:
        # same violation at planning time is the dispatcher's job instead
        rt = make_runtime(registry)
        rt.handle_instruction("crouch")
        start_x = rt.sim.state.x
        result = rt.handle_instruction("move 1 m")
        assert result.status == STATUS_REJECTED
        assert rt.sim.state.x == start_x

    def test_instructed_stand_unblocks(self, registry) -> None:
        rt = make_runtime(registry)
        rt.handle_instruction("crouch")
        result = rt.handle_instruction("stand up then move 1 m")
        assert result.status == STATUS_COMPLETED

    def test_prior_skill_from_history_blocks_pairing(self, registry) -> None:
        rt = make_runtime(registry, config=spawn_config())
        rt.handle_instruction("move 1 m")
        # seed history with a completed climb so the *next* instruction sees it
        from opengo.memory import ExecutionRecord

        t = time.monotonic_ns()
        rt.history.append(
            ExecutionRecord(
                plan_id="e" * 16,
                step_index=0,
                total_steps=1,
                skill="climb_stairs",
                params={},
                outcome="completed",
                error_code=None,
                terrain="stairs_up",
                t_instruction_ns=t,
                t_dispatch_done_ns=t,
                t_execution_start_ns=t,
                t_execution_end_ns=t,
            )
        )
        result = rt.handle_instruction("do a backflip")
        # candidate filtering already removes backflip, so the rule plan is empty
        assert result.status == STATUS_REJECTED


class TestReplanLoop:
    def test_transient_fault_retried_then_completed(self, registry) -> None:
        rt = make_runtime(registry)
        # deterministic stream: seed 1 fires on the first draw, not the second
        rt.sim.inject_fault("executor_fail", skill="move_forward", probability=0.6, seed=1)
        result = rt.handle_instruction("move 2 meters then turn left")
        assert result.status == STATUS_COMPLETED
        assert len(result.plans) >= 2
        assert result.plans[1].origin == "replan"
        outcomes = [r.outcome for r in result.records]
        assert "error" in outcomes and outcomes[-1] == "completed"

    def test_persistent_fault_drops_step_and_continues(self, registry) -> None:
        rt = make_runtime(registry)
        rt.sim.inject_fault("executor_fail", skill="move_forward", probability=1.0, seed=5)
        result = rt.handle_instruction("move 2 meters then turn left")
        # move fails twice, is dropped, turn still runs
        assert result.status == STATUS_COMPLETED
        skills = [r.skill for r in result.records]
        assert skills.count("move_forward") == 2
        assert skills[-1] == "turn"
        assert rt.sim.state.heading == pytest.approx(math.pi / 2, abs=1e-9)

    def test_replan_budget_bounds_the_loop(self, registry) -> None:
        rt = make_runtime(registry, settings=RuntimeSettings(max_replans=1))
        rt.sim.inject_fault("executor_fail", skill="move_forward", probability=1.0, seed=5)
        result = rt.handle_instruction("move 2 meters")
        assert result.status == STATUS_FAILED
        assert len(result.plans) <= 2


class TestEstop:
    def test_latched_session_refuses_instructions(self, registry) -> None:
        rt = make_runtime(registry)
        rt.estop()
        result = rt.handle_instruction("move 1 m")
        assert result.status == STATUS_REFUSED_ESTOP
        assert result.records == []
        rt.resume()
        assert rt.handle_instruction("move 1 m").status == STATUS_COMPLETED

    def test_estop_mid_execution_from_another_thread(self, registry) -> None:
        sink = Collector()
        rt = make_runtime(registry, sink)

        # trip the latch from a hook once the robot has moved a bit, as an
        # asynchronous operator would
        def tripwire(state) -> None:
            if state.x > 0.75:
                threading.Thread(target=rt.estop).start()

        rt.sim.add_tick_hook(tripwire)
        result = rt.handle_instruction("move 3 meters then turn left")
        # the estop lands during the move (preempting it) or just after
        # (preempting the turn); either way the instruction is preempted
        assert result.status == STATUS_PREEMPTED
        assert rt.sim.state.x < 3.0
        assert "estop" in sink.kinds()
        assert any(r.outcome == "preempted" for r in result.records)

    def test_safety_trip_preempts_and_reports_reason(self, registry) -> None:
        sink = Collector()
        rt = make_runtime(registry, sink, config=spawn_config(battery_pct=10.2))
        result = rt.handle_instruction("move 3 meters")
        assert result.status == STATUS_PREEMPTED
        estops = [u for u in sink.updates if u.kind == "estop"]
        assert estops
        assert "CONSTRAINT_RUNTIME_VIOLATION" in estops[0].payload["reasons"]

    def test_preempted_steps_apply_no_learning(self, registry) -> None:
        rt = make_runtime(registry, config=spawn_config(battery_pct=10.2))
        rt.handle_instruction("move 3 meters")
        assert rt.prefs.preference("flat", "move_forward") == 0.5


class TestCoordination:
    def test_gaps_only_between_steps(self, registry) -> None:
        model = CoordinationModel(scheduling_ms=5.0, transition_ms=3.0, dependency_ms=2.0)
        rt = make_runtime(registry, settings=RuntimeSettings(coordination=model))
        rt.handle_instruction("crouch then stand up then turn left")
        assert len(rt.coordination_trace) == 2
        for trace in rt.coordination_trace:
            assert trace.scheduling_ms >= 5.0
            assert trace.transition_ms >= 3.0
            assert trace.dependency_ms >= 2.0
            assert trace.total_ms >= model.total_ms

    def test_zero_model_traces_nothing(self, registry) -> None:
        rt = make_runtime(registry)
        rt.handle_instruction("crouch then stand up")
        assert rt.coordination_trace == []


def test_status_snapshot_shape(registry) -> None:
    rt = make_runtime(registry)
    result = rt.handle_instruction("move 1 m")
    snapshot = rt.status_snapshot()
    assert snapshot["terrain"] == "flat"
    assert snapshot["estop"] is False
    assert snapshot["history_length"] == 1
    assert snapshot["plans"][result.plans[0].plan_id] == "completed"
    assert "move_forward" in snapshot["skills"]


def test_history_log_feeds_replay(registry, tmp_path) -> None:
    log = tmp_path / "exec.jsonl"
    rt = make_runtime(registry, history=HistoryStore(log_path=log))
    rt.handle_instruction("move 2 meters then dance for 3 seconds")

    from opengo.learning import PreferenceStore

    replayed = PreferenceStore()
    for record in HistoryStore.read_log(log):
        replayed.apply_outcome(record, registry)
    assert replayed.to_obj() == rt.prefs.to_obj()
