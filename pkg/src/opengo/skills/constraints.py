"""Single evaluator for skill constraints.

Candidate filtering, plan validation and the pre-execution check all
call into this module, so a constraint means exactly one thing
everywhere.  Every check is O(1) against the (state, scenario, prior
skill, params) tuple.

Payload shapes:

* ``required_terrain`` — terrain class name or list of names.
* ``required_posture`` — posture name or list of names.
* ``min_battery`` — minimum battery percentage (number).
* ``forbidden_prior_skill`` — skill head id or list of ids that must not
  immediately precede this skill.
* ``max_speed_context`` — mapping ``{param, limit, terrain}``: when the
  current terrain is in ``terrain``, the named parameter must not exceed
  ``limit``.  With no bound parameters yet (candidate filtering) the
  constraint is treated as satisfiable and enforced at plan validation.
"""

from __future__ import annotations

from dataclasses import dataclass

from opengo.sim.model import RobotState, Scenario
from opengo.skills.model import (
    FORBIDDEN_PRIOR_SKILL,
    MAX_SPEED_CONTEXT,
    MIN_BATTERY,
    REQUIRED_POSTURE,
    REQUIRED_TERRAIN,
    Constraint,
    SkillTemplate,
)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


def _as_names(payload: object) -> list[str]:
    if isinstance(payload, str):
        return [payload]
    if isinstance(payload, (list, tuple)):
        return [str(item) for item in payload]
    return []


def payload_error(constraint: Constraint) -> str | None:
    """Shape-check a known constraint's payload; used by the review stage."""
    kind, payload = constraint.kind, constraint.payload
    if kind in (REQUIRED_TERRAIN, REQUIRED_POSTURE, FORBIDDEN_PRIOR_SKILL):
        names = _as_names(payload)
        if not names:
            return f"{kind}: payload must be a name or non-empty list of names"
        return None
    if kind == MIN_BATTERY:
        if isinstance(payload, bool) or not isinstance(payload, (int, float)):
            return f"{kind}: payload must be a number"
        if not 0 <= float(payload) <= 100:
            return f"{kind}: payload must be a percentage in [0, 100]"
        return None
    if kind == MAX_SPEED_CONTEXT:
        if not isinstance(payload, dict):
            return f"{kind}: payload must be a mapping with param, limit, terrain"
        missing = {"param", "limit", "terrain"} - set(payload)
        if missing:
            return f"{kind}: payload missing {sorted(missing)}"
        if isinstance(payload["limit"], bool) or not isinstance(payload["limit"], (int, float)):
            return f"{kind}: limit must be a number"
        if not _as_names(payload["terrain"]):
            return f"{kind}: terrain must be a name or list of names"
        return None
    return f"unknown constraint kind {kind!r}"


def check_constraint(
    constraint: Constraint,
    state: RobotState,
    scenario: Scenario,
    prior_skill: str | None = None,
    params: dict[str, float] | None = None,
) -> Violation | None:
    kind, payload = constraint.kind, constraint.payload

    if kind == REQUIRED_TERRAIN:
        allowed = _as_names(payload)
        if scenario.terrain.value not in allowed:
            return Violation(kind, f"terrain {scenario.terrain.value} not in {allowed}")
        return None

    if kind == REQUIRED_POSTURE:
        allowed = _as_names(payload)
        if state.posture.value not in allowed:
            return Violation(kind, f"posture {state.posture.value} not in {allowed}")
        return None

    if kind == MIN_BATTERY:
        threshold = float(payload)
        if state.battery_pct < threshold:
            return Violation(kind, f"battery {state.battery_pct:.1f}% below minimum {threshold:.1f}%")
        return None

    if kind == FORBIDDEN_PRIOR_SKILL:
        forbidden = _as_names(payload)
        if prior_skill is not None and prior_skill in forbidden:
            return Violation(kind, f"must not follow {prior_skill!r}")
        return None

    if kind == MAX_SPEED_CONTEXT:
        spec = payload if isinstance(payload, dict) else {}
        contexts = _as_names(spec.get("terrain"))
        if scenario.terrain.value not in contexts:
            return None
        if params is None:
            return None  # nothing bound yet; enforced once params exist
        value = params.get(str(spec.get("param")))
        limit = float(spec.get("limit", 0.0))
        if value is not None and float(value) > limit:
            return Violation(
                kind,
                f"{spec.get('param')}={value} exceeds {limit} on {scenario.terrain.value}",
            )
        return None

    return Violation(kind, f"unknown constraint kind {kind!r}")


def check_template(
    template: SkillTemplate,
    state: RobotState,
    scenario: Scenario,
    prior_skill: str | None = None,
    params: dict[str, float] | None = None,
) -> list[Violation]:
    """All violations for a template in the given situation (empty = admissible)."""
    violations = []
    for constraint in template.constraints:
        violation = check_constraint(constraint, state, scenario, prior_skill, params)
        if violation is not None:
            violations.append(violation)
    return violations
