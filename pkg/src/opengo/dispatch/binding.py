"""Parameter binding: raw proposals to complete, in-bounds parameter sets.

Binding fills omitted parameters from learned defaults (when present)
or the template defaults, normalizes enum names to indices, and checks
bounds.  It never clamps: an out-of-bounds value is an error for the
proposer to fix, not something to silently repair.
"""

from __future__ import annotations

import math
from typing import Any, Callable

from opengo.errors import OutOfRange, UnknownParameter
from opengo.skills.model import ParameterKind, ParameterSpec, SkillTemplate

#: (skill head, param name) -> value, or None
DefaultsFn = Callable[[str, str], float | None]


def _coerce(spec: ParameterSpec, value: Any, skill: str) -> float | int:
    name = f"{skill}.{spec.name}"
    if isinstance(value, str):
        if spec.kind is not ParameterKind.ENUM:
            raise OutOfRange(f"{name}: expected a number, got {value!r}")
        try:
            value = spec.values.index(value)
        except ValueError:
            raise OutOfRange(f"{name}: {value!r} is not one of {list(spec.values)}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OutOfRange(f"{name}: expected a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        raise OutOfRange(f"{name}: value {number!r} is not finite")
    if spec.kind in (ParameterKind.INTEGER, ParameterKind.ENUM):
        if number != int(number):
            raise OutOfRange(f"{name}: expected an integer, got {number}")
        result: float | int = int(number)
    else:
        result = number
    if not spec.contains(float(result)):
        raise OutOfRange(
            f"{name}: value {result} outside [{spec.lower_bound}, {spec.upper_bound}]"
        )
    return result


def bind_parameters(
    template: SkillTemplate,
    raw: dict[str, Any],
    learned_defaults: DefaultsFn | None = None,
) -> dict[str, float | int]:
    """Complete parameter set for one step, in template declaration order."""
    declared = {spec.name for spec in template.parameters}
    for name in raw:
        if name not in declared:
            raise UnknownParameter(f"{template.head_id} does not declare parameter {name!r}")

    bound: dict[str, float | int] = {}
    for spec in template.parameters:
        if spec.name in raw:
            value: Any = raw[spec.name]
        else:
            learned = learned_defaults(template.head_id, spec.name) if learned_defaults else None
            value = learned if learned is not None else spec.default
        bound[spec.name] = _coerce(spec, value, template.head_id)
    return bound
