"""The plan wire format.

Every planner backend, local or remote, speaks the same format::

    {"plan": [{"skill": "turn", "params": {"angle": 3.141592653589793}}]}

Canonical serialization is compact JSON with sorted keys; the plan id is
the first 16 hex digits of the SHA-256 of those bytes.  Identical step
sequences therefore hash to identical ids everywhere.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from opengo.errors import MalformedReply
from opengo.dispatch.model import PlanStep

_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


@dataclass(frozen=True)
class RawStep:
    """An unvalidated step as proposed by a backend; params may be partial
    and enum values may still be symbolic names."""

    skill: str
    params: dict[str, Any] = field(default_factory=dict)


def parse_plan_text(text: str) -> list[RawStep]:
    """Parse one wire-format reply; anything off-shape is MalformedReply.

    The single leniency is a surrounding markdown code fence, which chat
    models love to add.
    """
    body = text.strip()
    fenced = _FENCE.match(body)
    if fenced:
        body = fenced.group(1).strip()
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedReply(f"reply is not JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"plan"}:
        raise MalformedReply('reply must be exactly {"plan": [...]}')
    steps_doc = doc["plan"]
    if not isinstance(steps_doc, list):
        raise MalformedReply('"plan" must be a list')

    steps: list[RawStep] = []
    for i, item in enumerate(steps_doc):
        if not isinstance(item, dict):
            raise MalformedReply(f"step {i} is not an object")
        extra = set(item) - {"skill", "params"}
        if extra:
            raise MalformedReply(f"step {i} has unknown keys {sorted(extra)}")
        skill = item.get("skill")
        if not isinstance(skill, str) or not skill:
            raise MalformedReply(f"step {i} is missing a skill id")
        params = item.get("params", {})
        if params is None:
            params = {}
        if not isinstance(params, dict):
            raise MalformedReply(f"step {i} params must be an object")
        for name, value in params.items():
            if not isinstance(name, str):
                raise MalformedReply(f"step {i} has a non-string param name")
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise MalformedReply(f"step {i} param {name!r} must be a number or enum name")
        steps.append(RawStep(skill=skill, params=dict(params)))
    return steps


def serialize_plan(steps: Iterable[PlanStep | RawStep]) -> str:
    """Canonical wire serialization: compact JSON, sorted keys."""
    doc = {"plan": [{"skill": s.skill, "params": dict(s.params)} for s in steps]}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def plan_id_for(wire: str) -> str:
    return hashlib.sha256(wire.encode()).hexdigest()[:16]
