"""Skill template data model.

A template has exactly five semantic fields:

* ``head`` — identity: a stable id and a human label,
* ``parameters`` — typed, bounded tunables with defaults,
* ``constraints`` — machine-checkable applicability conditions,
* ``function`` — the executor binding plus its behavior digest,
* ``prompts`` — natural-language usage guidance for planners.

Templates move through a fixed review pipeline: draft -> reviewed ->
validated -> registered, with rejected reachable from draft or reviewed.
No stage may be skipped and every transition is recorded by the
registry's audit log.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from opengo.errors import IllegalTransition


class SkillStatus(str, Enum):
    DRAFT = "draft"
    REVIEWED = "reviewed"
    VALIDATED = "validated"
    REGISTERED = "registered"
    REJECTED = "rejected"


_ALLOWED_TRANSITIONS: dict[SkillStatus, frozenset[SkillStatus]] = {
    SkillStatus.DRAFT: frozenset({SkillStatus.REVIEWED, SkillStatus.REJECTED}),
    SkillStatus.REVIEWED: frozenset({SkillStatus.VALIDATED, SkillStatus.REJECTED}),
    SkillStatus.VALIDATED: frozenset({SkillStatus.REGISTERED}),
    SkillStatus.REGISTERED: frozenset(),
    SkillStatus.REJECTED: frozenset(),
}


class ParameterKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    ENUM = "enum"


# Constraint kinds.  All are O(1)-decidable against a (state, scenario,
# prior skill) triple; see opengo.skills.constraints for the evaluator.
REQUIRED_TERRAIN = "required_terrain"
REQUIRED_POSTURE = "required_posture"
MIN_BATTERY = "min_battery"
FORBIDDEN_PRIOR_SKILL = "forbidden_prior_skill"
MAX_SPEED_CONTEXT = "max_speed_context"

KNOWN_CONSTRAINT_KINDS = frozenset(
    {REQUIRED_TERRAIN, REQUIRED_POSTURE, MIN_BATTERY, FORBIDDEN_PRIOR_SKILL, MAX_SPEED_CONTEXT}
)


@dataclass(frozen=True)
class ParameterSpec:
    """One tunable of a skill.

    For ``enum`` parameters the bounds and default are indices into
    ``values``.  Bound ordering is *not* guaranteed at parse time; the
    review stage rejects inverted or non-finite bounds, so every
    registered skill satisfies lower <= default <= upper.
    """

    name: str
    unit: str
    lower_bound: float
    upper_bound: float
    default: float
    kind: ParameterKind = ParameterKind.CONTINUOUS
    values: tuple[str, ...] = ()

    def contains(self, value: float) -> bool:
        # NaN fails both comparisons, which is exactly what we want.
        return self.lower_bound <= value <= self.upper_bound

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "name": self.name,
            "unit": self.unit,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "default": self.default,
            "kind": self.kind.value,
        }
        if self.values:
            doc["values"] = list(self.values)
        return doc


@dataclass(frozen=True)
class Constraint:
    """One applicability condition; ``kind`` is validated during review."""

    kind: str
    payload: Any = None

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "payload": self.payload}


@dataclass
class SkillTemplate:
    head_id: str
    head_label: str
    parameters: list[ParameterSpec]
    constraints: list[Constraint]
    executor: str
    digest: str
    prompts: str
    status: SkillStatus = SkillStatus.DRAFT
    version: int = 0

    @property
    def skill_id(self) -> str:
        """Canonical versioned id; plain ``head_id`` resolves to latest."""
        return f"{self.head_id}@v{self.version}" if self.version else self.head_id

    def parameter(self, name: str) -> ParameterSpec | None:
        for spec in self.parameters:
            if spec.name == name:
                return spec
        return None

    def constraints_of(self, kind: str) -> list[Constraint]:
        return [c for c in self.constraints if c.kind == kind]

    def advance(self, new_status: SkillStatus) -> None:
        """Move along the pipeline; refuses skips and exits from terminals."""
        allowed = _ALLOWED_TRANSITIONS[self.status]
        if new_status not in allowed:
            raise IllegalTransition(
                f"{self.head_id}: {self.status.value} -> {new_status.value} is not a legal transition"
            )
        self.status = new_status

    def clone(self) -> "SkillTemplate":
        return copy.deepcopy(self)

    def to_dict(self) -> dict[str, Any]:
        return {
            "head": {"id": self.head_id, "label": self.head_label},
            "parameters": [p.to_dict() for p in self.parameters],
            "constraints": [c.to_dict() for c in self.constraints],
            "function": {"executor": self.executor, "digest": self.digest},
            "prompts": self.prompts,
        }


@dataclass(frozen=True)
class StatusTransition:
    """One audit-log entry for a pipeline move."""

    head_id: str
    version: int
    from_status: SkillStatus
    to_status: SkillStatus


@dataclass(frozen=True)
class Finding:
    """A single review/validation observation; ``error`` severity fails the stage."""

    code: str
    severity: str  # "error" | "warning" | "info"
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


@dataclass(frozen=True)
class ReviewReport:
    head_id: str
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not any(f.is_error for f in self.findings)


@dataclass(frozen=True)
class ValidationRun:
    label: str
    params: dict[str, float]
    status: str
    error_code: str | None
    ticks: int


@dataclass(frozen=True)
class ValidationReport:
    head_id: str
    runs: tuple[ValidationRun, ...]
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        if any(f.is_error for f in self.findings):
            return False
        return all(run.status == "completed" for run in self.runs)
