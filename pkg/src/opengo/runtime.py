"""The closed loop: instruction in, validated plan, supervised execution.

``SessionRuntime`` owns one simulator, one history store, one preference
store and one dispatcher.  ``handle_instruction`` plans, executes step
by step with a pre-execution constraint check before each step, records
every executed step, feeds outcomes to the learning store, replans on
step errors (up to a budget), and emits progress updates throughout.

The e-stop can arrive from any thread at any time, including while a
plan is still being computed; the latch is checked both before and
during execution, and a latched session refuses new skills until an
explicit resume.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from opengo.errors import EstopLatched, NoFeasiblePlan
from opengo.dispatch.backends import PlannerBackend, RuleBackend
from opengo.dispatch.model import DispatchPlan, PlanFinding, PlannerContext, StepFeedback
from opengo.dispatch.planner import Dispatcher, DispatcherSettings
from opengo.learning import PreferenceStore
from opengo.memory import (
    OUTCOME_COMPLETED,
    OUTCOME_ERROR,
    OUTCOME_PREEMPTED,
    ExecutionRecord,
    HistoryStore,
    completion_status,
    precheck,
)
from opengo.safety import SafetyLimits, SafetyMonitor
from opengo.sim.core import Simulator
from opengo.sim.model import ERR_PREEMPTED
from opengo.skills.pipeline import required_terrain_of
from opengo.skills.registry import SkillRegistry

UPDATE_PLAN_PROPOSED = "plan_proposed"
UPDATE_STEP_STARTED = "step_started"
UPDATE_STEP_COMPLETED = "step_completed"
UPDATE_STEP_FAILED = "step_failed"
UPDATE_PLAN_DONE = "plan_done"
UPDATE_ESTOP = "estop"
UPDATE_ASK_FEEDBACK = "ask_feedback"

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_PREEMPTED = "preempted"
STATUS_REJECTED = "rejected"
STATUS_REFUSED_ESTOP = "refused_estop"


@dataclass(frozen=True)
class Update:
    kind: str
    corr_id: str
    payload: dict[str, Any]


@dataclass(frozen=True)
class CoordinationModel:
    """Per-gap inter-step overhead, itemized.

    Between consecutive steps the runtime spends scheduling, state
    transition and dependency-resolution time, in that order.  All three
    default to zero; the latency harness configures them explicitly.
    """

    scheduling_ms: float = 0.0
    transition_ms: float = 0.0
    dependency_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.scheduling_ms + self.transition_ms + self.dependency_ms


@dataclass(frozen=True)
class GapTrace:
    """Measured coordination spend for one inter-step gap."""

    plan_id: str
    before_step: int
    scheduling_ms: float
    transition_ms: float
    dependency_ms: float

    @property
    def total_ms(self) -> float:
        return self.scheduling_ms + self.transition_ms + self.dependency_ms


@dataclass(frozen=True)
class RuntimeSettings:
    task: str = "interactive quadruped operation"
    max_replans: int = 3
    coordination: CoordinationModel = field(default_factory=CoordinationModel)


@dataclass
class InstructionResult:
    instruction: str
    status: str
    plans: list[DispatchPlan] = field(default_factory=list)
    records: list[ExecutionRecord] = field(default_factory=list)
    findings: list[PlanFinding] = field(default_factory=list)

    @property
    def plan_ids(self) -> list[str]:
        return [p.plan_id for p in self.plans]


UpdateSink = Callable[[Update], None]


class SessionRuntime:
    def __init__(
        self,
        registry: SkillRegistry,
        sim: Simulator,
        backend: PlannerBackend | None = None,
        history: HistoryStore | None = None,
        prefs: PreferenceStore | None = None,
        settings: RuntimeSettings | None = None,
        dispatcher_settings: DispatcherSettings | None = None,
        limits: SafetyLimits | None = None,
        update_sink: UpdateSink | None = None,
    ) -> None:
        self.registry = registry
        self.sim = sim
        self.backend = backend or RuleBackend()
        self.history = history or HistoryStore()
        self.prefs = prefs or PreferenceStore()
        self.settings = settings or RuntimeSettings()
        self.monitor = SafetyMonitor(sim, limits)
        self.dispatcher = Dispatcher(
            registry,
            dispatcher_settings,
            defaults_for=self.prefs.learned_default,
            preferences=self.prefs.preference,
        )
        self.plans: dict[str, DispatchPlan] = {}
        self.coordination_trace: list[GapTrace] = []
        self._sink = update_sink
        self._lock = threading.RLock()

    # -- updates -----------------------------------------------------------------

    def set_update_sink(self, sink: UpdateSink | None) -> None:
        self._sink = sink

    def _emit(self, kind: str, corr_id: str, **payload: Any) -> None:
        if self._sink is not None:
            self._sink(Update(kind=kind, corr_id=corr_id, payload=payload))

    # -- main entry ----------------------------------------------------------------

    def handle_instruction(self, instruction: str, corr_id: str = "") -> InstructionResult:
        """Plan and execute one instruction to a terminal status."""
        with self._lock:
            t_instruction = time.monotonic_ns()
            result = InstructionResult(instruction=instruction, status=STATUS_FAILED)

            if self.sim.estop_latched:
                result.status = STATUS_REFUSED_ESTOP
                self._emit(
                    UPDATE_PLAN_DONE,
                    corr_id,
                    status=result.status,
                    detail="e-stop is latched; resume before new instructions",
                )
                return result

            context = self._context(instruction)
            try:
                plan = self.dispatcher.plan(context, self.backend)
            except NoFeasiblePlan as exc:
                result.status = STATUS_REJECTED
                result.findings = list(exc.findings)
                self._emit(
                    UPDATE_PLAN_DONE,
                    corr_id,
                    status=result.status,
                    findings=[f.render() for f in exc.findings],
                )
                return result
            t_dispatch_done = time.monotonic_ns()

            self._register_plan(plan, corr_id)
            result.plans.append(plan)
            result.status = self._execute(plan, corr_id, t_instruction, t_dispatch_done, result)

            self._emit(
                UPDATE_PLAN_DONE,
                corr_id,
                status=result.status,
                plan_ids=result.plan_ids,
            )
            if result.status == STATUS_COMPLETED:
                self._emit(UPDATE_ASK_FEEDBACK, corr_id, plan_id=result.plans[-1].plan_id)
            return result

    def _context(self, instruction: str) -> PlannerContext:
        return self.dispatcher.build_context(
            task=self.settings.task,
            instruction=instruction,
            state=self.sim.state,
            scenario=self.sim.scenario(),
            history=self.history.recent(),
            prior_skill=self.history.last_skill(),
        )

    def _register_plan(self, plan: DispatchPlan, corr_id: str) -> None:
        self.plans[plan.plan_id] = plan
        self._emit(UPDATE_PLAN_PROPOSED, corr_id, plan=plan.to_dict())

    # -- execution -----------------------------------------------------------------

    def _execute(
        self,
        plan: DispatchPlan,
        corr_id: str,
        t_instruction: int,
        t_dispatch_done: int,
        result: InstructionResult,
    ) -> str:
        current = plan
        replans = 0
        while True:
            status, failed_index = self._run_steps(current, corr_id, t_instruction, t_dispatch_done, result)
            if status != OUTCOME_ERROR:
                return {
                    OUTCOME_COMPLETED: STATUS_COMPLETED,
                    OUTCOME_PREEMPTED: STATUS_PREEMPTED,
                }[status]

            replans += 1
            if replans > self.settings.max_replans:
                return STATUS_FAILED
            feedback = StepFeedback(kind="error", step_index=failed_index)
            context = self._context(current.steps[failed_index].skill)
            context.instruction = result.instruction
            try:
                current = self.dispatcher.replan(feedback, current, context)
            except NoFeasiblePlan:
                return STATUS_FAILED
            t_dispatch_done = time.monotonic_ns()
            self._register_plan(current, corr_id)
            result.plans.append(current)

    def _run_steps(
        self,
        plan: DispatchPlan,
        corr_id: str,
        t_instruction: int,
        t_dispatch_done: int,
        result: InstructionResult,
    ) -> tuple[str, int]:
        """Execute a plan's steps in order; returns (terminal outcome, index)."""
        for index, step in enumerate(plan.steps):
            if index > 0:
                self._coordinate(plan.plan_id, index)

            if self.sim.estop_latched:
                record = self._record_step(
                    plan, index, step, OUTCOME_PREEMPTED, ERR_PREEMPTED,
                    t_instruction, t_dispatch_done,
                    t_start=time.monotonic_ns(), t_end=time.monotonic_ns(),
                )
                result.records.append(record)
                self._emit(UPDATE_STEP_FAILED, corr_id, plan_id=plan.plan_id, step=index,
                           skill=step.skill, error_code=ERR_PREEMPTED)
                return OUTCOME_PREEMPTED, index

            template = self.registry.lookup(step.skill)
            check = precheck(step, self.registry, self.sim.state, self.sim.scenario(), self.history)
            if not check.ok:
                now = time.monotonic_ns()
                record = self._record_step(
                    plan, index, step, OUTCOME_ERROR, "PRECHECK_FAILED",
                    t_instruction, t_dispatch_done, t_start=now, t_end=now,
                )
                result.records.append(record)
                self._emit(
                    UPDATE_STEP_FAILED, corr_id, plan_id=plan.plan_id, step=index,
                    skill=step.skill, error_code="PRECHECK_FAILED",
                    detail="; ".join(v.message for v in check.violations),
                )
                return OUTCOME_ERROR, index

            self._emit(UPDATE_STEP_STARTED, corr_id, plan_id=plan.plan_id, step=index,
                       skill=step.skill, params=dict(step.params))
            terrain = self.sim.scenario().terrain.value
            self.monitor.watch(template)
            t_start = time.monotonic_ns()
            try:
                outcome = self.sim.execute_skill(
                    template.executor, dict(step.params),
                    required_terrain_of(template), skill_id=template.head_id,
                )
                sim_status, error_code = outcome.status, outcome.error_code
            except EstopLatched:
                sim_status, error_code = "error", ERR_PREEMPTED
            finally:
                t_end = time.monotonic_ns()
                self.monitor.watch(None)

            if error_code == ERR_PREEMPTED:
                record_outcome: str = OUTCOME_PREEMPTED
            elif sim_status == "completed":
                record_outcome = OUTCOME_COMPLETED
            else:
                record_outcome = OUTCOME_ERROR

            record = self._record_step(
                plan, index, step, record_outcome, error_code,
                t_instruction, t_dispatch_done, t_start, t_end, terrain,
            )
            result.records.append(record)
            self.prefs.apply_outcome(record, self.registry)

            if record_outcome == OUTCOME_COMPLETED:
                self._emit(UPDATE_STEP_COMPLETED, corr_id, plan_id=plan.plan_id, step=index,
                           skill=step.skill, state=self.sim.state.to_dict())
            else:
                self._emit(UPDATE_STEP_FAILED, corr_id, plan_id=plan.plan_id, step=index,
                           skill=step.skill, error_code=error_code)

            if record_outcome == OUTCOME_PREEMPTED:
                trip = self.monitor.trips[-1] if self.monitor.trips else None
                self._emit(
                    UPDATE_ESTOP, corr_id, latched=True,
                    reasons=[r.code for r in trip.verdict.reasons] if trip else ["OPERATOR"],
                )
                return OUTCOME_PREEMPTED, index
            if record_outcome == OUTCOME_ERROR:
                return OUTCOME_ERROR, index

        return OUTCOME_COMPLETED, len(plan.steps) - 1

    def _coordinate(self, plan_id: str, before_step: int) -> None:
        model = self.settings.coordination
        if model.total_ms <= 0:
            return
        spans = []
        for budget_ms in (model.scheduling_ms, model.transition_ms, model.dependency_ms):
            begin = time.monotonic_ns()
            if budget_ms > 0:
                time.sleep(budget_ms / 1000.0)
            spans.append((time.monotonic_ns() - begin) / 1e6)
        self.coordination_trace.append(
            GapTrace(plan_id, before_step, spans[0], spans[1], spans[2])
        )

    def _record_step(
        self,
        plan: DispatchPlan,
        index: int,
        step,
        outcome: str,
        error_code: str | None,
        t_instruction: int,
        t_dispatch_done: int,
        t_start: int,
        t_end: int,
        terrain: str | None = None,
    ) -> ExecutionRecord:
        record = ExecutionRecord(
            plan_id=plan.plan_id,
            step_index=index,
            total_steps=len(plan.steps),
            skill=step.skill,
            params=dict(step.params),
            outcome=outcome,
            error_code=error_code if outcome != OUTCOME_COMPLETED else None,
            terrain=terrain or self.sim.scenario().terrain.value,
            t_instruction_ns=t_instruction,
            t_dispatch_done_ns=t_dispatch_done,
            t_execution_start_ns=t_start,
            t_execution_end_ns=t_end,
        )
        self.history.append(record)
        return record

    # -- operator controls ------------------------------------------------------------

    def estop(self, corr_id: str = "", reason: str = "OPERATOR") -> None:
        """Latch immediately; safe from any thread, even mid-execution."""
        self.sim.trigger_estop()
        self._emit(UPDATE_ESTOP, corr_id, latched=True, reasons=[reason])

    def resume(self, corr_id: str = "") -> None:
        self.sim.resume()
        self._emit(UPDATE_ESTOP, corr_id, latched=False, reasons=[])

    def feedback(self, plan_id: str, verdict: str) -> list:
        """Operator approval/rejection of an executed plan."""
        records = self.history.for_plan(plan_id)
        return self.prefs.ingest_feedback(verdict, records, self.registry)

    def plan_status(self, plan_id: str) -> str:
        return completion_status(self.history.all_records(), plan_id)

    def status_snapshot(self) -> dict[str, Any]:
        state = self.sim.state
        return {
            "state": state.to_dict(),
            "terrain": self.sim.scenario().terrain.value if self.sim.grid.contains(state.x, state.y) else None,
            "estop": self.sim.estop_latched,
            "skills": self.registry.heads(),
            "history_length": len(self.history.all_records()),
            "plans": {pid: self.plan_status(pid) for pid in list(self.plans)},
            "learning": self.prefs.top_skills(),
        }
