"""Shape-only document parsing: strict on structure, silent on semantics."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opengo.errors import DuplicateParameter, SchemaError
from opengo.skills.documents import (
    load_skill_file,
    parse_skill_document,
    serialize_skill_document,
)
from opengo.skills.library import shipped_documents
from opengo.skills.model import ParameterKind, SkillStatus


GOOD_DOC = """
head: {id: wave, label: "Wave a paw"}
parameters:
  - {name: duration, unit: seconds, lower_bound: 1, upper_bound: 5, default: 2}
constraints:
  - {kind: required_posture, payload: standing}
function: {executor: dance, digest: "sha256:0000"}
prompts: Use when the operator asks for a greeting gesture.
"""


def test_good_document_parses_to_draft() -> None:
    template = parse_skill_document(GOOD_DOC)
    assert template.head_id == "wave"
    assert template.status is SkillStatus.DRAFT
    assert template.version == 0
    assert template.parameters[0].kind is ParameterKind.CONTINUOUS
    assert template.parameters[0].unit == "seconds"
    assert template.constraints[0].payload == "standing"


def test_parameters_and_constraints_may_be_empty_lists() -> None:
    template = parse_skill_document(
        GOOD_DOC.replace(
            "parameters:\n  - {name: duration, unit: seconds, lower_bound: 1, upper_bound: 5, default: 2}",
            "parameters: []",
        ).replace(
            "constraints:\n  - {kind: required_posture, payload: standing}",
            "constraints: []",
        )
    )
    assert template.parameters == []
    assert template.constraints == []


@pytest.mark.parametrize("missing", ["head", "parameters", "constraints", "function", "prompts"])
def test_every_top_field_is_required(missing: str) -> None:
    import yaml

    doc = yaml.safe_load(GOOD_DOC)
    del doc[missing]
    with pytest.raises(SchemaError, match=missing):
        parse_skill_document(doc)


def test_unknown_top_field_rejected() -> None:
    with pytest.raises(SchemaError, match="unknown fields"):
        parse_skill_document(GOOD_DOC + "\nnotes: extra\n")


def test_semantic_problems_survive_parsing() -> None:
    """Inverted bounds and bogus executors are review findings, not parse errors."""
    template = parse_skill_document(
        GOOD_DOC.replace("lower_bound: 1, upper_bound: 5", "lower_bound: 5, upper_bound: 1")
        .replace("executor: dance", "executor: levitate")
        .replace("kind: required_posture", "kind: required_vibes")
    )
    assert template.parameters[0].lower_bound == 5.0
    assert template.executor == "levitate"
    assert template.constraints[0].kind == "required_vibes"


def test_duplicate_parameter_name() -> None:
    doc = GOOD_DOC.replace(
        "parameters:\n",
        "parameters:\n  - {name: duration, unit: s, lower_bound: 0, upper_bound: 1, default: 0}\n",
    )
    with pytest.raises(DuplicateParameter):
        parse_skill_document(doc)


def test_enum_requires_value_list() -> None:
    doc = GOOD_DOC.replace("default: 2}", "default: 2, kind: enum}")
    with pytest.raises(SchemaError, match="values"):
        parse_skill_document(doc)


def test_enum_values_must_be_unique() -> None:
    doc = GOOD_DOC.replace(
        "default: 2}",
        "default: 0, kind: enum, values: [a, a]}",
    ).replace("lower_bound: 1, upper_bound: 5", "lower_bound: 0, upper_bound: 1")
    with pytest.raises(SchemaError, match="duplicate"):
        parse_skill_document(doc)


def test_values_forbidden_outside_enum() -> None:
    doc = GOOD_DOC.replace("default: 2}", "default: 2, values: [a, b]}")
    with pytest.raises(SchemaError, match="only enum"):
        parse_skill_document(doc)


@pytest.mark.parametrize("kind", ["integer", "enum"])
def test_integral_kinds_need_integral_bounds(kind: str) -> None:
    suffix = ", values: [a, b, c]" if kind == "enum" else ""
    doc = GOOD_DOC.replace(
        "lower_bound: 1, upper_bound: 5, default: 2}",
        f"lower_bound: 1, upper_bound: 2, default: 1.5, kind: {kind}{suffix}}}",
    )
    with pytest.raises(SchemaError, match="integral"):
        parse_skill_document(doc)


@pytest.mark.parametrize(
    "needle,replacement",
    [
        ("id: wave", "id: ''"),
        ("label: \"Wave a paw\"", "label: ''"),
        ("digest: \"sha256:0000\"", "digest: ''"),
        ("prompts: Use when the operator asks for a greeting gesture.", "prompts: ''"),
    ],
)
def test_identity_fields_must_be_non_empty(needle: str, replacement: str) -> None:
    with pytest.raises(SchemaError):
        parse_skill_document(GOOD_DOC.replace(needle, replacement))


def test_booleans_are_not_numbers() -> None:
    with pytest.raises(SchemaError, match="number"):
        parse_skill_document(GOOD_DOC.replace("default: 2", "default: true"))


def test_invalid_yaml_is_a_schema_error() -> None:
    with pytest.raises(SchemaError, match="YAML"):
        parse_skill_document("head: {id: x\n  label")


def test_non_mapping_root_rejected() -> None:
    with pytest.raises(SchemaError, match="root"):
        parse_skill_document("- just\n- a list\n")


def test_serialize_round_trips() -> None:
    template = parse_skill_document(GOOD_DOC)
    again = parse_skill_document(serialize_skill_document(template))
    assert again.to_dict() == template.to_dict()


def test_shipped_documents_all_parse() -> None:
    paths = shipped_documents()
    assert len(paths) == 8
    for path in paths:
        template = load_skill_file(path)
        assert template.status is SkillStatus.DRAFT


# -- registered-library invariants ------------------------------------------


def test_registered_bounds_are_ordered(registry) -> None:
    for head in registry.heads():
        template = registry.lookup(head)
        assert template.status is SkillStatus.REGISTERED
        for spec in template.parameters:
            assert spec.lower_bound <= spec.default <= spec.upper_bound, (
                f"{head}.{spec.name}"
            )


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_registered_defaults_always_in_range(registry, data) -> None:
    """Any in-bounds sample passes containment; out-of-bounds never does."""
    templates = [registry.lookup(head) for head in registry.heads()]
    specs = [s for t in templates for s in t.parameters]
    spec = data.draw(st.sampled_from(specs))
    inside = data.draw(st.floats(spec.lower_bound, spec.upper_bound))
    assert spec.contains(inside)
    outside = data.draw(
        st.one_of(
            st.floats(max_value=spec.lower_bound, exclude_max=True, allow_nan=False),
            st.floats(min_value=spec.upper_bound, exclude_min=True, allow_nan=False),
            st.just(float("nan")),
        )
    )
    assert not spec.contains(outside)
