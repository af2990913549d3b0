"""Skill templates: documents, review/validation pipeline, and the registry."""

from opengo.skills.model import (
    Constraint,
    ParameterSpec,
    SkillStatus,
    SkillTemplate,
)
from opengo.skills.registry import SkillRegistry

__all__ = [
    "Constraint",
    "ParameterSpec",
    "SkillRegistry",
    "SkillStatus",
    "SkillTemplate",
]
