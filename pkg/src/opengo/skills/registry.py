"""Versioned store of registered skill templates.

Versions per head are monotonic and never reused.  Registered templates
are immutable: the store only hands out deep copies, so callers can't
mutate what later lookups see.  Every pipeline status change routed
through the registry lands in an append-only audit log.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Callable

from opengo.errors import NotValidated, UnknownSkill, VersionConflict
from opengo.sim.model import RobotState, Scenario
from opengo.skills import constraints as constraint_eval
from opengo.skills.model import SkillStatus, SkillTemplate, StatusTransition

_VERSIONED_ID = re.compile(r"^(?P<head>.+)@v(?P<version>\d+)$")

PreferenceFn = Callable[[str, str], float]  # (terrain class, head id) -> score


def split_skill_id(skill_id: str) -> tuple[str, int | None]:
    """``"turn@v2"`` -> ``("turn", 2)``; plain heads get version ``None``."""
    match = _VERSIONED_ID.match(skill_id)
    if match:
        return match.group("head"), int(match.group("version"))
    return skill_id, None


class SkillRegistry:
    def __init__(self) -> None:
        self._templates: dict[str, dict[int, SkillTemplate]] = {}
        self._latest: dict[str, int] = {}
        self.audit_log: list[StatusTransition] = []

    # -- audit -------------------------------------------------------------

    def record_transition(
        self, head_id: str, version: int, from_status: SkillStatus, to_status: SkillStatus
    ) -> None:
        self.audit_log.append(StatusTransition(head_id, version, from_status, to_status))

    # -- write path ----------------------------------------------------------

    def register(self, template: SkillTemplate) -> SkillTemplate:
        """Admit a validated template; returns the stored (registered) copy.

        A template carrying an explicit nonzero version must claim exactly
        the next free version for its head; anything else is a
        VersionConflict.  Version 0 means "assign for me".
        """
        if template.status is not SkillStatus.VALIDATED:
            raise NotValidated(
                f"{template.head_id}: cannot register from status {template.status.value!r}"
            )
        head = template.head_id
        next_version = self._latest.get(head, 0) + 1
        if template.version:
            if template.version != next_version:
                raise VersionConflict(
                    f"{head}: version {template.version} unavailable, next is {next_version}"
                )
        stored = template.clone()
        stored.version = next_version
        self.record_transition(head, next_version, stored.status, SkillStatus.REGISTERED)
        stored.advance(SkillStatus.REGISTERED)
        self._templates.setdefault(head, {})[next_version] = stored
        self._latest[head] = next_version
        # reflect the outcome on the caller's object too
        template.version = next_version
        template.status = SkillStatus.REGISTERED
        return stored.clone()

    # -- read path -----------------------------------------------------------

    def heads(self) -> list[str]:
        return sorted(self._templates)

    def latest_version(self, head: str) -> int:
        if head not in self._latest:
            raise UnknownSkill(f"no registered skill with head {head!r}")
        return self._latest[head]

    def __contains__(self, skill_id: str) -> bool:
        head, version = split_skill_id(skill_id)
        if head not in self._templates:
            return False
        return version is None or version in self._templates[head]

    def lookup(self, skill_id: str) -> SkillTemplate:
        """Resolve a plain head to its latest version, or ``head@vN`` exactly."""
        head, version = split_skill_id(skill_id)
        if head not in self._templates:
            raise UnknownSkill(f"no registered skill with head {head!r}")
        if version is None:
            version = self._latest[head]
        try:
            return self._templates[head][version].clone()
        except KeyError:
            raise UnknownSkill(f"{head} has no version {version}") from None

    def filter_candidates(
        self,
        state: RobotState,
        scenario: Scenario,
        prior_skill: str | None = None,
        preferences: PreferenceFn | None = None,
    ) -> list[str]:
        """Head ids admissible in this situation, best-preferred first.

        A head is admissible when its latest version has no constraint
        violations against (state, scenario, prior_skill).  Ordering is
        by preference score descending, then head id for determinism.
        """
        admissible: list[tuple[float, str]] = []
        for head, version in self._latest.items():
            template = self._templates[head][version]
            if constraint_eval.check_template(template, state, scenario, prior_skill):
                continue
            score = preferences(scenario.terrain.value, head) if preferences else 0.5
            admissible.append((score, head))
        admissible.sort(key=lambda item: (-item[0], item[1]))
        return [head for _, head in admissible]

    # -- persistence -----------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """One YAML document per registered version; the filename carries
        the version since the document schema has exactly five fields."""
        from opengo.skills.documents import serialize_skill_document

        target = Path(directory)
        target.mkdir(parents=True, exist_ok=True)
        for head, versions in self._templates.items():
            for version, template in versions.items():
                path = target / f"{head}@v{version}.yaml"
                path.write_text(serialize_skill_document(template))

    @classmethod
    def load(cls, directory: str | Path) -> "SkillRegistry":
        from opengo.skills.documents import load_skill_file

        registry = cls()
        for path in sorted(Path(directory).glob("*@v*.yaml")):
            head, version = split_skill_id(path.stem)
            template = load_skill_file(path)
            template.status = SkillStatus.REGISTERED
            template.version = version or 0
            registry._templates.setdefault(head, {})[template.version] = template
            registry._latest[head] = max(registry._latest.get(head, 0), template.version)
        return registry
