"""Plan validation: the gate every proposal must pass before execution.

The checks, in order: plan shape (non-empty, under the step cap), every
step references a registered skill, every parameter binds in bounds, the
first step's constraints hold in the current situation, and no step
violates a forbidden-prior-skill pairing.  All failures are collected as
findings rather than stopping at the first, so a retrying planner gets
the full picture at once.
"""

from __future__ import annotations

from typing import Iterable

from opengo.errors import OutOfRange, UnknownParameter, UnknownSkill
from opengo.dispatch.binding import DefaultsFn, bind_parameters
from opengo.dispatch.model import PlanFinding, PlanStep
from opengo.dispatch.wire import RawStep
from opengo.sim.model import RobotState, Scenario
from opengo.skills import constraints as constraint_eval
from opengo.skills.model import FORBIDDEN_PRIOR_SKILL, MAX_SPEED_CONTEXT
from opengo.skills.registry import SkillRegistry

#: hard cap on plan length; anything longer is rejected outright
MAX_PLAN_STEPS = 64

EMPTY_PLAN = "EMPTY_PLAN"
PLAN_TOO_LONG = "PLAN_TOO_LONG"
UNKNOWN_SKILL_CODE = "UNKNOWN_SKILL"
UNKNOWN_PARAM = "UNKNOWN_PARAM"
PARAM_OUT_OF_RANGE = "PARAM_OUT_OF_RANGE"
CONSTRAINT_UNSATISFIED = "CONSTRAINT_UNSATISFIED"
FORBIDDEN_TRANSITION = "FORBIDDEN_TRANSITION"


def validate_plan(
    raw_steps: Iterable[RawStep],
    registry: SkillRegistry,
    state: RobotState,
    scenario: Scenario,
    prior_skill: str | None = None,
    learned_defaults: DefaultsFn | None = None,
    max_steps: int = MAX_PLAN_STEPS,
) -> tuple[tuple[PlanStep, ...] | None, list[PlanFinding]]:
    """Bind and check a proposal; returns (steps, []) or (None, findings)."""
    raw = list(raw_steps)
    findings: list[PlanFinding] = []

    if not raw:
        return None, [PlanFinding(EMPTY_PLAN, "the proposal contains no steps")]
    if len(raw) > max_steps:
        return None, [PlanFinding(PLAN_TOO_LONG, f"{len(raw)} steps exceeds the cap of {max_steps}")]

    bound_steps: list[PlanStep | None] = []
    templates = []
    for i, step in enumerate(raw):
        if step.skill not in registry:
            findings.append(PlanFinding(UNKNOWN_SKILL_CODE, f"{step.skill!r} is not registered", i))
            bound_steps.append(None)
            templates.append(None)
            continue
        template = registry.lookup(step.skill)
        templates.append(template)
        try:
            params = bind_parameters(template, step.params, learned_defaults)
        except UnknownParameter as exc:
            findings.append(PlanFinding(UNKNOWN_PARAM, str(exc), i))
            bound_steps.append(None)
            continue
        except (OutOfRange, UnknownSkill) as exc:
            findings.append(PlanFinding(PARAM_OUT_OF_RANGE, str(exc), i))
            bound_steps.append(None)
            continue
        bound_steps.append(PlanStep(skill=step.skill, params=params))

    first_template, first_bound = templates[0], bound_steps[0]
    if first_template is not None and first_bound is not None:
        violations = constraint_eval.check_template(
            first_template, state, scenario, prior_skill, dict(first_bound.params)
        )
        for violation in violations:
            findings.append(PlanFinding(CONSTRAINT_UNSATISFIED, violation.message, 0))

    # speed-context caps are state-independent given the current terrain,
    # so enforce them on later steps too rather than discovering mid-plan
    for i in range(1, len(raw)):
        template, bound = templates[i], bound_steps[i]
        if template is None or bound is None:
            continue
        for constraint in template.constraints_of(MAX_SPEED_CONTEXT):
            violation = constraint_eval.check_constraint(
                constraint, state, scenario, None, dict(bound.params)
            )
            if violation is not None:
                findings.append(PlanFinding(CONSTRAINT_UNSATISFIED, violation.message, i))

    for i in range(1, len(raw)):
        template = templates[i]
        if template is None:
            continue
        prior = raw[i - 1].skill
        for constraint in template.constraints_of(FORBIDDEN_PRIOR_SKILL):
            payload = constraint.payload
            forbidden = [payload] if isinstance(payload, str) else list(payload or [])
            if prior in forbidden:
                findings.append(
                    PlanFinding(FORBIDDEN_TRANSITION, f"{template.head_id} must not follow {prior}", i)
                )

    if findings:
        return None, findings
    return tuple(s for s in bound_steps if s is not None), []
