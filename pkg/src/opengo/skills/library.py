"""The shipped skill library and helpers to admit documents end to end.

``build_registry`` walks every document in the data directory through
review, simulated validation and registration, exactly the way an
operator-supplied document would travel.  Nothing is preloaded behind
the pipeline's back.
"""

from __future__ import annotations

from pathlib import Path

from opengo.errors import SchemaError
from opengo.sim.core import SimConfig
from opengo.sim.executors import BUILTIN_EXECUTORS, Executor
from opengo.sim.model import TerrainClass
from opengo.skills import pipeline
from opengo.skills.documents import load_skill_file, parse_skill_document
from opengo.skills.model import ReviewReport, SkillTemplate, ValidationReport
from opengo.skills.registry import SkillRegistry

DATA_DIR = Path(__file__).parent / "data"

#: known-good spawn poses in the shipped arena, one per terrain class
SPAWNS: dict[TerrainClass, tuple[float, float, float]] = {
    TerrainClass.FLAT: (0.25, 0.25, 0.0),
    TerrainClass.ROUGH: (10.25, 5.25, 0.0),
    TerrainClass.NARROW: (5.25, 8.25, 0.0),
    TerrainClass.STAIRS_UP: (0.25, 10.25, 0.0),
    TerrainClass.STAIRS_DOWN: (0.25, 12.75, 0.0),
}


def spawn_config(terrain: TerrainClass = TerrainClass.FLAT, **overrides) -> SimConfig:
    """A simulator config whose start pose sits on the given terrain."""
    x, y, heading = SPAWNS[terrain]
    fields = {"start_x": x, "start_y": y, "start_heading": heading}
    fields.update(overrides)
    return SimConfig(**fields)


def validation_config(template: SkillTemplate) -> SimConfig:
    """Pick a spawn that satisfies the template's terrain constraint."""
    terrain = pipeline.required_terrain_of(template)
    if not terrain:
        return spawn_config(TerrainClass.FLAT)
    # deterministic choice among the allowed classes
    for candidate in SPAWNS:
        if candidate in terrain:
            return spawn_config(candidate)
    raise SchemaError(f"{template.head_id}: no known spawn for terrains {sorted(t.value for t in terrain)}")


def import_document(
    source: str | Path,
    registry: SkillRegistry,
    executors: dict[str, Executor] | None = None,
    config: SimConfig | None = None,
) -> tuple[SkillTemplate, ReviewReport, ValidationReport | None]:
    """Full admission path for one document: parse, review, validate, register.

    Returns the template together with the stage reports; the template's
    final status tells whether it was registered or rejected.
    """
    executors = executors or BUILTIN_EXECUTORS
    if isinstance(source, Path) or "\n" not in str(source):
        template = load_skill_file(source)
    else:
        template = parse_skill_document(str(source))

    review = pipeline.review_skill(template, executors, registry)
    if not review.passed:
        return template, review, None

    validation = pipeline.validate_in_simulation(template, config or validation_config(template), registry)
    if not validation.passed:
        return template, review, validation

    pipeline.register_skill(template, registry)
    return template, review, validation


def shipped_documents() -> list[Path]:
    return sorted(DATA_DIR.glob("*.yaml"))


def build_registry() -> SkillRegistry:
    """Admit the whole shipped library; raises if any document fails."""
    registry = SkillRegistry()
    for path in shipped_documents():
        template, review, validation = import_document(path, registry)
        if template.status.value != "registered":
            stage = "review" if validation is None else "validation"
            problems = review.findings if validation is None else validation.findings
            details = "; ".join(f.message for f in problems)
            raise RuntimeError(f"shipped skill {path.name} failed {stage}: {details}")
    return registry
