"""Parsing and serialization of skill documents.

Documents are YAML mappings with exactly the five template fields::

    head: {id: wave, label: "Wave a paw"}
    parameters:
      - {name: duration, unit: seconds, lower_bound: 1, upper_bound: 5,
         default: 2, kind: continuous}
    constraints:
      - {kind: required_posture, payload: standing}
    function: {executor: dance, digest: "sha256:..."}
    prompts: |
      Use when the operator asks for a greeting gesture.

Parsing is deliberately shape-only: it checks presence and types, not
semantics.  Inverted bounds, unknown executors, unknown constraint kinds
and digest mismatches are the review stage's job, so that they surface
as findings rather than hard parse failures.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from opengo.errors import DuplicateParameter, SchemaError
from opengo.skills.model import (
    Constraint,
    ParameterKind,
    ParameterSpec,
    SkillStatus,
    SkillTemplate,
)

_TOP_FIELDS = ("head", "parameters", "constraints", "function", "prompts")
_PARAM_FIELDS = {"name", "unit", "lower_bound", "upper_bound", "default", "kind", "values"}


def _require(mapping: dict[str, Any], key: str, where: str) -> Any:
    if key not in mapping:
        raise SchemaError(f"{where}: missing field {key!r}")
    return mapping[key]


def _text(value: Any, where: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise SchemaError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_parameter(doc: Any, index: int) -> ParameterSpec:
    where = f"parameters[{index}]"
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a mapping, got {type(doc).__name__}")
    unknown = set(doc) - _PARAM_FIELDS
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")

    name = _text(_require(doc, "name", where), f"{where}.name")
    unit = _text(_require(doc, "unit", where), f"{where}.unit")
    lower = _number(_require(doc, "lower_bound", where), f"{where}.lower_bound")
    upper = _number(_require(doc, "upper_bound", where), f"{where}.upper_bound")
    default = _number(_require(doc, "default", where), f"{where}.default")

    kind_raw = doc.get("kind", ParameterKind.CONTINUOUS.value)
    try:
        kind = ParameterKind(kind_raw)
    except ValueError:
        raise SchemaError(f"{where}.kind: unknown parameter kind {kind_raw!r}") from None

    values: tuple[str, ...] = ()
    if kind is ParameterKind.ENUM:
        raw_values = _require(doc, "values", where)
        if not isinstance(raw_values, list) or not raw_values:
            raise SchemaError(f"{where}.values: enum parameters need a non-empty value list")
        values = tuple(_text(v, f"{where}.values[{i}]") for i, v in enumerate(raw_values))
        if len(set(values)) != len(values):
            raise SchemaError(f"{where}.values: duplicate enum values")
    elif "values" in doc:
        raise SchemaError(f"{where}.values: only enum parameters take a value list")

    if kind in (ParameterKind.INTEGER, ParameterKind.ENUM):
        for label, num in (("lower_bound", lower), ("upper_bound", upper), ("default", default)):
            if num != int(num):
                raise SchemaError(f"{where}.{label}: {kind.value} parameters need integral bounds")

    return ParameterSpec(
        name=name,
        unit=unit,
        lower_bound=lower,
        upper_bound=upper,
        default=default,
        kind=kind,
        values=values,
    )


def _parse_constraint(doc: Any, index: int) -> Constraint:
    where = f"constraints[{index}]"
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected a mapping, got {type(doc).__name__}")
    kind = _text(_require(doc, "kind", where), f"{where}.kind")
    unknown = set(doc) - {"kind", "payload"}
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    return Constraint(kind=kind, payload=doc.get("payload"))


def parse_skill_document(source: str | dict[str, Any]) -> SkillTemplate:
    """Parse YAML text (or an already-loaded mapping) into a draft template."""
    if isinstance(source, str):
        try:
            doc = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise SchemaError(f"document is not valid YAML: {exc}") from None
    else:
        doc = source
    if not isinstance(doc, dict):
        raise SchemaError(f"document root: expected a mapping, got {type(doc).__name__}")

    unknown = set(doc) - set(_TOP_FIELDS)
    if unknown:
        raise SchemaError(f"document root: unknown fields {sorted(unknown)}")
    for fieldname in _TOP_FIELDS:
        if fieldname not in doc:
            raise SchemaError(f"document root: missing field {fieldname!r}")

    head = doc["head"]
    if not isinstance(head, dict):
        raise SchemaError("head: expected a mapping")
    head_id = _text(_require(head, "id", "head"), "head.id")
    head_label = _text(_require(head, "label", "head"), "head.label")
    if set(head) - {"id", "label"}:
        raise SchemaError(f"head: unknown fields {sorted(set(head) - {'id', 'label'})}")

    raw_params = doc["parameters"]
    if raw_params is None:
        raw_params = []
    if not isinstance(raw_params, list):
        raise SchemaError("parameters: expected a list")
    parameters = [_parse_parameter(p, i) for i, p in enumerate(raw_params)]
    seen: set[str] = set()
    for spec in parameters:
        if spec.name in seen:
            raise DuplicateParameter(f"parameters: duplicate name {spec.name!r}")
        seen.add(spec.name)

    raw_constraints = doc["constraints"]
    if raw_constraints is None:
        raw_constraints = []
    if not isinstance(raw_constraints, list):
        raise SchemaError("constraints: expected a list")
    constraints = [_parse_constraint(c, i) for i, c in enumerate(raw_constraints)]

    function = doc["function"]
    if not isinstance(function, dict):
        raise SchemaError("function: expected a mapping")
    executor = _text(_require(function, "executor", "function"), "function.executor")
    digest = _text(_require(function, "digest", "function"), "function.digest")
    if set(function) - {"executor", "digest"}:
        raise SchemaError(f"function: unknown fields {sorted(set(function) - {'executor', 'digest'})}")

    prompts = _text(doc["prompts"], "prompts")

    return SkillTemplate(
        head_id=head_id,
        head_label=head_label,
        parameters=parameters,
        constraints=constraints,
        executor=executor,
        digest=digest,
        prompts=prompts,
        status=SkillStatus.DRAFT,
        version=0,
    )


def load_skill_file(path: str | Path) -> SkillTemplate:
    return parse_skill_document(Path(path).read_text())


def serialize_skill_document(template: SkillTemplate) -> str:
    """Render a template back to canonical YAML (field order preserved)."""
    return yaml.safe_dump(template.to_dict(), sort_keys=False, allow_unicode=True)
