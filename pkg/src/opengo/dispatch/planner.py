"""The dispatcher: retries, fallback, and replanning around the plan gate.

A backend gets a bounded number of attempts; every rejection's findings
are appended to the context so the next attempt can react to them.  When
the primary backend is exhausted the deterministic rule backend gets the
same treatment.  Only a plan that fully passes validation ever comes
back to the caller; otherwise NoFeasiblePlan carries every finding
collected along the way.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Callable

from opengo.errors import BackendTimeout, MalformedReply, NoFeasiblePlan
from opengo.dispatch import checking
from opengo.dispatch.backends import PlannerBackend, RuleBackend
from opengo.dispatch.model import (
    DispatchPlan,
    PlanFinding,
    PlannerContext,
    PlanStep,
    StepFeedback,
    now_iso,
)
from opengo.dispatch.wire import RawStep, parse_plan_text, plan_id_for, serialize_plan
from opengo.sim.model import RobotState, Scenario, TerrainClass
from opengo.skills.registry import SkillRegistry

if TYPE_CHECKING:
    from opengo.memory import ExecutionRecord

MALFORMED_REPLY = "MALFORMED_REPLY"
BACKEND_ERROR = "BACKEND_ERROR"
BACKEND_TIMEOUT = "BACKEND_TIMEOUT"

#: a skill erroring this many times recently is dropped when replanning
REPLAN_ERROR_LIMIT = 2

DefaultsForFn = Callable[[str, str, str], float | None]  # (terrain, skill, param)
PreferenceFn = Callable[[str, str], float]  # (terrain, skill) -> score

#: sentinel: "pick the rule backend as fallback unless I already am one"
_AUTO_FALLBACK: Any = object()


@dataclass(frozen=True)
class DispatcherSettings:
    retries: int = 3
    backend_timeout_s: float | None = 30.0
    max_plan_steps: int = checking.MAX_PLAN_STEPS
    history_window: int = 32


class Dispatcher:
    def __init__(
        self,
        registry: SkillRegistry,
        settings: DispatcherSettings | None = None,
        defaults_for: DefaultsForFn | None = None,
        preferences: PreferenceFn | None = None,
    ) -> None:
        self.registry = registry
        self.settings = settings or DispatcherSettings()
        self.defaults_for = defaults_for
        self.preferences = preferences
        self._pool: concurrent.futures.ThreadPoolExecutor | None = None

    # -- context ---------------------------------------------------------------

    def build_context(
        self,
        task: str,
        instruction: str,
        state: RobotState,
        scenario: Scenario,
        history: "list[ExecutionRecord] | None" = None,
        prior_skill: str | None = None,
        avoid: list[str] | None = None,
    ) -> PlannerContext:
        candidates = []
        for head in self.registry.filter_candidates(state, scenario, prior_skill, self.preferences):
            template = self.registry.lookup(head)
            candidates.append(
                {
                    "skill": head,
                    "label": template.head_label,
                    "prompts": template.prompts,
                    "parameters": [p.to_dict() for p in template.parameters],
                    "constraints": [c.to_dict() for c in template.constraints],
                }
            )
        window = (history or [])[-self.settings.history_window :]
        summaries = [r.summary() for r in window]
        return PlannerContext(
            task=task,
            instruction=instruction,
            terrain=scenario.terrain.value,
            state=state,
            candidates=candidates,
            history=summaries,
            prior_skill=prior_skill,
            avoid=list(avoid or []),
        )

    # -- planning ----------------------------------------------------------------

    def plan(
        self,
        context: PlannerContext,
        backend: PlannerBackend,
        fallback: PlannerBackend | None = _AUTO_FALLBACK,
    ) -> DispatchPlan:
        if fallback is _AUTO_FALLBACK:
            fallback = RuleBackend() if backend.kind != "rule" else None
        chain: list[PlannerBackend] = [backend]
        if fallback is not None:
            chain.append(fallback)

        collected: list[PlanFinding] = []
        for current in chain:
            for _ in range(self.settings.retries):
                findings = self._attempt(current, context)
                if isinstance(findings, DispatchPlan):
                    return findings
                collected.extend(findings)
                context.feedback.extend(f.render() for f in findings)
        raise NoFeasiblePlan(
            f"no backend produced a valid plan for {context.instruction!r}", collected
        )

    def _attempt(
        self, backend: PlannerBackend, context: PlannerContext
    ) -> DispatchPlan | list[PlanFinding]:
        try:
            reply = self._call(backend, context)
            raw_steps = parse_plan_text(reply)
        except MalformedReply as exc:
            return [PlanFinding(MALFORMED_REPLY, str(exc))]
        except BackendTimeout as exc:
            return [PlanFinding(BACKEND_TIMEOUT, str(exc))]
        except Exception as exc:  # backend bugs and transport errors count as a retry
            return [PlanFinding(BACKEND_ERROR, f"{type(exc).__name__}: {exc}")]

        steps, findings = self._validate(raw_steps, context)
        if steps is None:
            return findings
        return self._finish(steps, origin=backend.kind)

    def _validate(
        self, raw_steps: list[RawStep], context: PlannerContext
    ) -> tuple[tuple[PlanStep, ...] | None, list[PlanFinding]]:
        scenario = Scenario(terrain=TerrainClass(context.terrain))
        defaults = None
        if self.defaults_for is not None:
            terrain = context.terrain
            provider = self.defaults_for
            defaults = lambda skill, param: provider(terrain, skill, param)  # noqa: E731
        return checking.validate_plan(
            raw_steps,
            self.registry,
            context.state,
            scenario,
            prior_skill=context.prior_skill,
            learned_defaults=defaults,
            max_steps=self.settings.max_plan_steps,
        )

    def _finish(self, steps: tuple[PlanStep, ...], origin: str) -> DispatchPlan:
        wire = serialize_plan(steps)
        return DispatchPlan(
            steps=steps, origin=origin, plan_id=plan_id_for(wire), created_at=now_iso()
        )

    def _call(self, backend: PlannerBackend, context: PlannerContext) -> str:
        timeout = self.settings.backend_timeout_s
        if timeout is None or backend.kind == "rule":
            return backend.propose(context)
        if self._pool is None:
            self._pool = concurrent.futures.ThreadPoolExecutor(max_workers=1)
        future = self._pool.submit(backend.propose, context)
        try:
            return future.result(timeout=timeout)
        except concurrent.futures.TimeoutError:
            future.cancel()
            raise BackendTimeout(f"{backend.kind} backend exceeded {timeout}s") from None

    # -- replanning ---------------------------------------------------------------

    def replan(
        self, feedback: StepFeedback, plan: DispatchPlan, context: PlannerContext
    ) -> DispatchPlan:
        """Continue after feedback about one step of a running plan.

        On completion the unexecuted suffix is re-issued as its own plan.
        On error the failed step is retried only while it has fewer than
        REPLAN_ERROR_LIMIT recent errors and its constraints still hold;
        otherwise it is dropped and the remainder continues.
        """
        remaining = list(plan.steps[feedback.step_index + 1 :])
        proposals: list[list[PlanStep]] = []
        if feedback.kind == "completed":
            proposals.append(remaining)
        else:
            failed = plan.steps[feedback.step_index]
            errors = sum(
                1
                for item in context.history
                if item.get("skill") == failed.skill and item.get("status") == "error"
            )
            if errors < REPLAN_ERROR_LIMIT and failed.skill not in context.avoid:
                proposals.append([failed] + remaining)
            proposals.append(remaining)

        collected: list[PlanFinding] = []
        for proposal in proposals:
            raw = [RawStep(s.skill, dict(s.params)) for s in proposal]
            steps, findings = self._validate(raw, context)
            if steps is not None:
                return self._finish(steps, origin="replan")
            collected.extend(findings)
        raise NoFeasiblePlan("no viable continuation of the interrupted plan", collected)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=False, cancel_futures=True)
            self._pool = None
