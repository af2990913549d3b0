"""Execution history: the bounded working window and the persistent log.

Every executed step produces exactly one ExecutionRecord.  The store
keeps a ring of the most recent records (the planner's working memory)
plus the full in-session archive, and appends each record as one JSON
line to the execution log when a path is configured.

Timestamps inside a record are monotonic-clock nanoseconds, so interval
arithmetic is immune to wall-clock jumps; log lines additionally carry
ISO-8601 wall times derived from a wall/monotonic anchor pair captured
when the store was created.
"""

from __future__ import annotations

import datetime as dt
import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from opengo.sim.model import RobotState, Scenario
from opengo.skills import constraints as constraint_eval
from opengo.skills.constraints import Violation
from opengo.skills.registry import SkillRegistry

if TYPE_CHECKING:
    from opengo.dispatch.model import PlanStep

DEFAULT_WINDOW = 32

OUTCOME_COMPLETED = "completed"
OUTCOME_ERROR = "error"
OUTCOME_PREEMPTED = "preempted"

STATUS_COMPLETED = "completed"
STATUS_FAILED = "failed"
STATUS_IN_PROGRESS = "in_progress"


@dataclass(frozen=True)
class ExecutionRecord:
    """One executed (or terminally attempted) plan step.

    ``total_steps`` is the owning plan's length so that plan status can
    be derived from records alone, without consulting the plan store.
    """

    plan_id: str
    step_index: int
    total_steps: int
    skill: str
    params: dict[str, float]
    outcome: str  # completed | error | preempted
    error_code: str | None
    terrain: str
    t_instruction_ns: int
    t_dispatch_done_ns: int
    t_execution_start_ns: int
    t_execution_end_ns: int

    def __post_init__(self) -> None:
        stamps = (
            self.t_instruction_ns,
            self.t_dispatch_done_ns,
            self.t_execution_start_ns,
            self.t_execution_end_ns,
        )
        if not all(earlier <= later for earlier, later in zip(stamps, stamps[1:])):
            raise ValueError(f"record timestamps out of order: {stamps}")
        if self.outcome not in (OUTCOME_COMPLETED, OUTCOME_ERROR, OUTCOME_PREEMPTED):
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def ok(self) -> bool:
        return self.outcome == OUTCOME_COMPLETED

    def summary(self) -> dict[str, Any]:
        """Compact view for planner contexts."""
        return {
            "skill": self.skill,
            "status": self.outcome,
            "error_code": self.error_code,
            "terrain": self.terrain,
        }

    def to_obj(self, wall_of=None) -> dict[str, Any]:
        def stamp(ns: int) -> Any:
            if wall_of is None:
                return ns
            return {"mono_ns": ns, "wall": wall_of(ns)}

        return {
            "plan_id": self.plan_id,
            "step_index": self.step_index,
            "total_steps": self.total_steps,
            "skill": self.skill,
            "params": dict(self.params),
            "outcome": self.outcome,
            "error_code": self.error_code,
            "terrain": self.terrain,
            "t_instruction": stamp(self.t_instruction_ns),
            "t_dispatch_done": stamp(self.t_dispatch_done_ns),
            "t_execution_start": stamp(self.t_execution_start_ns),
            "t_execution_end": stamp(self.t_execution_end_ns),
        }

    @classmethod
    def from_obj(cls, doc: dict[str, Any]) -> "ExecutionRecord":
        def ns(value: Any) -> int:
            return int(value["mono_ns"]) if isinstance(value, dict) else int(value)

        return cls(
            plan_id=doc["plan_id"],
            step_index=int(doc["step_index"]),
            total_steps=int(doc["total_steps"]),
            skill=doc["skill"],
            params=dict(doc["params"]),
            outcome=doc["outcome"],
            error_code=doc.get("error_code"),
            terrain=doc.get("terrain", "flat"),
            t_instruction_ns=ns(doc["t_instruction"]),
            t_dispatch_done_ns=ns(doc["t_dispatch_done"]),
            t_execution_start_ns=ns(doc["t_execution_start"]),
            t_execution_end_ns=ns(doc["t_execution_end"]),
        )


class HistoryStore:
    def __init__(self, window: int = DEFAULT_WINDOW, log_path: str | Path | None = None) -> None:
        self.window = window
        self.log_path = Path(log_path) if log_path else None
        self._ring: deque[ExecutionRecord] = deque(maxlen=window)
        self._archive: list[ExecutionRecord] = []
        self._wall_anchor = dt.datetime.now(dt.timezone.utc)
        self._mono_anchor_ns = time.monotonic_ns()

    def _wall_of(self, mono_ns: int) -> str:
        delta = dt.timedelta(microseconds=(mono_ns - self._mono_anchor_ns) / 1000)
        return (self._wall_anchor + delta).isoformat()

    def append(self, record: ExecutionRecord) -> None:
        self._ring.append(record)
        self._archive.append(record)
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            with self.log_path.open("a") as handle:
                handle.write(json.dumps(record.to_obj(self._wall_of), sort_keys=True) + "\n")

    def recent(self, n: int | None = None) -> list[ExecutionRecord]:
        """The working window (newest last); ``n`` trims it further."""
        items = list(self._ring)
        return items if n is None else items[-n:]

    def all_records(self) -> list[ExecutionRecord]:
        return list(self._archive)

    def for_plan(self, plan_id: str) -> list[ExecutionRecord]:
        return [r for r in self._archive if r.plan_id == plan_id]

    def last_skill(self) -> str | None:
        """Most recently attempted skill, the 'prior skill' for constraints."""
        return self._archive[-1].skill if self._archive else None

    @staticmethod
    def read_log(path: str | Path) -> list[ExecutionRecord]:
        records = []
        for line in Path(path).read_text().splitlines():
            if line.strip():
                records.append(ExecutionRecord.from_obj(json.loads(line)))
        return records


def completion_status(records: list[ExecutionRecord], plan_id: str) -> str:
    """Plan status as a pure fold over execution records.

    completed: every step index of the plan has a completed record.
    failed: any record ended in error or preemption.
    in_progress: some steps have no record yet and none failed.
    """
    mine = [r for r in records if r.plan_id == plan_id]
    if not mine:
        return STATUS_IN_PROGRESS
    total = mine[0].total_steps
    done = {r.step_index for r in mine if r.outcome == OUTCOME_COMPLETED}
    if done == set(range(total)):
        return STATUS_COMPLETED
    if any(r.outcome in (OUTCOME_ERROR, OUTCOME_PREEMPTED) for r in mine):
        return STATUS_FAILED
    return STATUS_IN_PROGRESS


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    violations: tuple[Violation, ...] = field(default_factory=tuple)


def precheck(
    step: "PlanStep",
    registry: SkillRegistry,
    state: RobotState,
    scenario: Scenario,
    history: HistoryStore,
) -> CheckResult:
    """Immediately-before-execution constraint check for one step.

    Mirrors plan validation's first-step check, but at execution time
    with the then-current state, scenario, and prior skill.
    """
    template = registry.lookup(step.skill)
    violations = constraint_eval.check_template(
        template, state, scenario, history.last_skill(), dict(step.params)
    )
    return CheckResult(ok=not violations, violations=tuple(violations))
