"""Plan and planner-context value types."""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Any

from opengo.sim.model import RobotState


@dataclass(frozen=True)
class PlanStep:
    """One fully-bound step: a registered skill head plus complete parameters."""

    skill: str
    params: dict[str, float | int] = field(default_factory=dict)

    def to_wire_obj(self) -> dict[str, Any]:
        return {"skill": self.skill, "params": dict(self.params)}


@dataclass(frozen=True)
class DispatchPlan:
    """An ordered, validated sequence of steps.

    ``plan_id`` is a content hash of the canonical serialization, so two
    plans with identical steps share an id no matter when or where they
    were produced.  ``created_at`` is informational and deliberately not
    part of the hash.
    """

    steps: tuple[PlanStep, ...]
    origin: str  # "llm" | "rule" | "replan"
    plan_id: str
    created_at: str

    def to_wire(self) -> str:
        from opengo.dispatch.wire import serialize_plan

        return serialize_plan(self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan_id": self.plan_id,
            "origin": self.origin,
            "created_at": self.created_at,
            "steps": [s.to_wire_obj() for s in self.steps],
        }


def now_iso() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


@dataclass(frozen=True)
class PlanFinding:
    """Why a proposed plan (or one step of it) was rejected."""

    code: str
    detail: str
    step_index: int | None = None

    def render(self) -> str:
        where = f" (step {self.step_index})" if self.step_index is not None else ""
        return f"{self.code}{where}: {self.detail}"


@dataclass
class PlannerContext:
    """Everything a planner backend may look at, serializable byte-for-byte."""

    task: str
    instruction: str
    terrain: str
    state: RobotState
    candidates: list[dict[str, Any]]
    history: list[dict[str, Any]] = field(default_factory=list)
    feedback: list[str] = field(default_factory=list)
    avoid: list[str] = field(default_factory=list)
    prior_skill: str | None = None

    def to_obj(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "instruction": self.instruction,
            "terrain": self.terrain,
            "state": self.state.to_dict(),
            "candidates": self.candidates,
            "history": self.history,
            "feedback": list(self.feedback),
            "avoid": sorted(self.avoid),
            "prior_skill": self.prior_skill,
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_obj(), sort_keys=True, separators=(",", ":")).encode()

    def candidate_ids(self) -> list[str]:
        return [c["skill"] for c in self.candidates]

    def render_prompt(self) -> str:
        """System prompt for chat-completion planners."""
        lines = [
            "You orchestrate skills on a quadruped robot.",
            f"Task: {self.task}",
            f"Current terrain: {self.terrain}; battery {self.state.battery_pct:.0f}%; "
            f"posture {self.state.posture.value}.",
            "Skills you may use (with parameter bounds):",
        ]
        for cand in self.candidates:
            params = ", ".join(
                f"{p['name']} [{p['lower_bound']}..{p['upper_bound']}] default {p['default']}"
                for p in cand["parameters"]
            )
            lines.append(f"- {cand['skill']}: {cand['prompts'].strip()} Params: {params or 'none'}")
        if self.feedback:
            lines.append("Previous attempts were rejected:")
            lines.extend(f"  * {item}" for item in self.feedback)
        if self.avoid:
            lines.append(f"Do not use these skills: {', '.join(sorted(self.avoid))}")
        lines.append(
            'Reply with exactly one JSON object, no prose: {"plan": [{"skill": "<id>", '
            '"params": {"<name>": <number>}}]} . Omitted params take defaults.'
        )
        return "\n".join(lines)


@dataclass(frozen=True)
class StepFeedback:
    """Execution feedback handed back to the dispatcher for replanning."""

    kind: str  # "completed" | "error"
    step_index: int
    error_code: str | None = None
