"""Skill admission pipeline: review, simulated validation, registration.

Review is static analysis of a draft document against the executor
table.  Validation actually runs the skill in a sandbox simulator at its
default parameters and at every bound corner (up to four parameters;
beyond that, sixteen seeded random samples).  Registration hands the
validated template to the registry, which assigns the next version.

Each stage advances the template's status on success and rejects it on
failure, so a template can never reach the registry without passing
both gates in order.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random

from opengo.errors import IllegalTransition
from opengo.safety import SafetyMonitor
from opengo.sim.core import SimConfig, Simulator
from opengo.sim.executors import Executor
from opengo.sim.model import Posture, TerrainClass
from opengo.skills import constraints as constraint_eval
from opengo.skills.model import (
    KNOWN_CONSTRAINT_KINDS,
    REQUIRED_TERRAIN,
    Finding,
    ParameterKind,
    ReviewReport,
    SkillStatus,
    SkillTemplate,
    ValidationReport,
    ValidationRun,
)
from opengo.skills.registry import SkillRegistry

#: corner sampling is exhaustive up to this many parameters
MAX_CORNER_PARAMS = 4
#: number of seeded random samples beyond that
RANDOM_SAMPLES = 16


# -- review --------------------------------------------------------------------


def review_skill(
    template: SkillTemplate,
    executors: dict[str, Executor],
    registry: SkillRegistry | None = None,
) -> ReviewReport:
    """Static checks on a draft; advances to reviewed or rejects it."""
    if template.status is not SkillStatus.DRAFT:
        raise IllegalTransition(f"{template.head_id}: review requires a draft, not {template.status.value}")

    findings: list[Finding] = []

    executor = executors.get(template.executor)
    if executor is None:
        findings.append(
            Finding("UNKNOWN_EXECUTOR", "error", f"no executor named {template.executor!r}")
        )
    else:
        if template.digest != executor.digest():
            findings.append(
                Finding(
                    "DIGEST_MISMATCH",
                    "error",
                    f"document digest {template.digest[:24]}... does not match "
                    f"executor {executor.name} ({executor.digest()[:24]}...)",
                )
            )
        declared = {p.name for p in template.parameters}
        for needed in executor.consumes:
            if needed not in declared:
                findings.append(
                    Finding(
                        "UNDECLARED_PARAMETER",
                        "error",
                        f"executor consumes {needed!r} but the document does not declare it",
                    )
                )
        for extra in sorted(declared - set(executor.consumes)):
            findings.append(
                Finding("UNUSED_PARAMETER", "warning", f"parameter {extra!r} is never consumed")
            )

    for spec in template.parameters:
        where = f"parameter {spec.name!r}"
        if not (math.isfinite(spec.lower_bound) and math.isfinite(spec.upper_bound)):
            findings.append(Finding("NONFINITE_BOUND", "error", f"{where}: bounds must be finite"))
            continue
        if spec.lower_bound > spec.upper_bound:
            findings.append(
                Finding(
                    "INVERTED_BOUNDS",
                    "error",
                    f"{where}: lower bound {spec.lower_bound} exceeds upper bound {spec.upper_bound}",
                )
            )
        elif not spec.contains(spec.default):
            findings.append(
                Finding(
                    "DEFAULT_OUT_OF_BOUNDS",
                    "error",
                    f"{where}: default {spec.default} outside [{spec.lower_bound}, {spec.upper_bound}]",
                )
            )
        if spec.kind is ParameterKind.ENUM:
            top = len(spec.values) - 1
            if not (0 <= spec.lower_bound <= top and 0 <= spec.upper_bound <= top):
                findings.append(
                    Finding(
                        "ENUM_BOUNDS",
                        "error",
                        f"{where}: bounds must index into its {len(spec.values)} values",
                    )
                )

    for constraint in template.constraints:
        if constraint.kind not in KNOWN_CONSTRAINT_KINDS:
            findings.append(
                Finding("UNKNOWN_CONSTRAINT", "error", f"unknown constraint kind {constraint.kind!r}")
            )
            continue
        problem = constraint_eval.payload_error(constraint)
        if problem:
            findings.append(Finding("BAD_CONSTRAINT_PAYLOAD", "error", problem))

    report = ReviewReport(head_id=template.head_id, findings=tuple(findings))
    target = SkillStatus.REVIEWED if report.passed else SkillStatus.REJECTED
    if registry is not None:
        registry.record_transition(template.head_id, template.version, template.status, target)
    template.advance(target)
    return report


# -- validation ------------------------------------------------------------------


def _default_params(template: SkillTemplate) -> dict[str, float]:
    params: dict[str, float] = {}
    for spec in template.parameters:
        value = spec.default
        if spec.kind in (ParameterKind.INTEGER, ParameterKind.ENUM):
            value = int(value)
        params[spec.name] = value
    return params


def sample_validation_params(template: SkillTemplate) -> list[tuple[str, dict[str, float]]]:
    """Labeled parameter sets to run: default plus corners (or random samples).

    Duplicates collapse, so a zero-parameter skill yields exactly one run.
    """
    runs: list[tuple[str, dict[str, float]]] = [("default", _default_params(template))]
    specs = template.parameters
    if not specs:
        return runs

    def cast(spec, value):
        return int(value) if spec.kind in (ParameterKind.INTEGER, ParameterKind.ENUM) else float(value)

    if len(specs) <= MAX_CORNER_PARAMS:
        axes = [[cast(s, s.lower_bound), cast(s, s.upper_bound)] for s in specs]
        for corner in itertools.product(*axes):
            params = {s.name: v for s, v in zip(specs, corner)}
            label = "corner:" + ",".join(f"{k}={v}" for k, v in params.items())
            runs.append((label, params))
    else:
        seed = int.from_bytes(hashlib.sha256(template.head_id.encode()).digest()[:4], "big")
        rng = random.Random(seed)
        for i in range(RANDOM_SAMPLES):
            params = {}
            for s in specs:
                if s.kind is ParameterKind.CONTINUOUS:
                    params[s.name] = rng.uniform(s.lower_bound, s.upper_bound)
                else:
                    params[s.name] = rng.randint(int(s.lower_bound), int(s.upper_bound))
            runs.append((f"sample:{i}", params))

    unique: list[tuple[str, dict[str, float]]] = []
    seen: set[tuple] = set()
    for label, params in runs:
        key = tuple(sorted(params.items()))
        if key not in seen:
            seen.add(key)
            unique.append((label, params))
    return unique


def required_terrain_of(template: SkillTemplate) -> frozenset[TerrainClass] | None:
    names: set[str] = set()
    for constraint in template.constraints_of(REQUIRED_TERRAIN):
        if isinstance(constraint.payload, str):
            names.add(constraint.payload)
        elif isinstance(constraint.payload, (list, tuple)):
            names.update(str(v) for v in constraint.payload)
    if not names:
        return None
    return frozenset(TerrainClass(name) for name in names)


def validate_in_simulation(
    template: SkillTemplate,
    config: SimConfig,
    registry: SkillRegistry | None = None,
) -> ValidationReport:
    """Run the skill across its sampled parameter space in a sandbox.

    A run passes when it completes within its tick budget, never trips
    the safety monitor, and ends upright.  Any failing run rejects the
    template.
    """
    if template.status is not SkillStatus.REVIEWED:
        raise IllegalTransition(
            f"{template.head_id}: validation requires a reviewed template, not {template.status.value}"
        )

    findings: list[Finding] = []
    runs: list[ValidationRun] = []

    probe = Simulator(config)
    violations = constraint_eval.check_template(template, probe.state, probe.scenario(), None)
    if violations:
        details = "; ".join(v.message for v in violations)
        findings.append(
            Finding(
                "CONSTRAINT_UNSATISFIABLE_IN_CONFIG",
                "error",
                f"start configuration violates constraints: {details}",
            )
        )
    else:
        terrain = required_terrain_of(template)
        for label, params in sample_validation_params(template):
            sim = Simulator(config)
            monitor = SafetyMonitor(sim)
            monitor.watch(template)
            outcome = sim.execute_skill(template.executor, params, terrain, skill_id=template.head_id)
            status, code = outcome.status, outcome.error_code
            if outcome.ok and monitor.trips:
                status, code = "error", "SAFETY_TRIP"
            if outcome.ok and outcome.final_state.posture is Posture.FALLEN:
                status, code = "error", "ENDED_FALLEN"
            runs.append(ValidationRun(label, params, status, code, outcome.ticks))
            if status != "completed":
                findings.append(
                    Finding("RUN_FAILED", "error", f"run {label} ended {status} ({code})")
                )

    report = ValidationReport(head_id=template.head_id, runs=tuple(runs), findings=tuple(findings))
    target = SkillStatus.VALIDATED if report.passed else SkillStatus.REJECTED
    if registry is not None:
        registry.record_transition(template.head_id, template.version, template.status, target)
    template.advance(target)
    return report


# -- registration ------------------------------------------------------------------


def register_skill(template: SkillTemplate, registry: SkillRegistry) -> SkillTemplate:
    """Admit a validated template into the registry (next free version)."""
    return registry.register(template)
