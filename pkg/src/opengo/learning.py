"""Outcome-driven adaptation of skill preferences and parameter defaults.

Two separate signals, both keyed by terrain class:

* a per-(terrain, skill) preference score, an exponential moving average
  of outcomes (completed = 1, error = 0) with smoothing ``alpha``.  New
  pairs start at 0.5.  Scores order candidate skills during planning.
* per-(terrain, skill, parameter) learned defaults.  Only successful
  executions pull the default toward the value actually used, by
  fraction ``beta``, and the result is clipped to the declared bounds.

Every mutation flows through ``apply_outcome`` / ``ingest_feedback``, so
replaying an execution log through a fresh store reproduces the live
store's state exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from opengo.errors import OutOfRange, UnknownSkill
from opengo.memory import OUTCOME_COMPLETED, OUTCOME_ERROR, ExecutionRecord
from opengo.skills.model import ParameterSpec
from opengo.skills.registry import SkillRegistry

DEFAULT_ALPHA = 0.2
DEFAULT_BETA = 0.3
INITIAL_SCORE = 0.5

STATE_FILENAME = "learning_state"

APPROVE = "approve"
REJECT = "reject"


@dataclass(frozen=True)
class AppliedUpdate:
    """One concrete change made by feedback ingestion, for reporting."""

    kind: str  # "preference" | "param_default"
    terrain: str
    skill: str
    param: str | None
    value: float


class PreferenceStore:
    def __init__(self, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> None:
        if not (0.0 < alpha <= 1.0 and 0.0 < beta <= 1.0):
            raise ValueError("alpha and beta must be in (0, 1]")
        self.alpha = alpha
        self.beta = beta
        self._scores: dict[tuple[str, str], float] = {}
        self._defaults: dict[tuple[str, str, str], float] = {}

    # -- reads -------------------------------------------------------------

    def preference(self, terrain: str, skill: str) -> float:
        return self._scores.get((terrain, skill), INITIAL_SCORE)

    def learned_default(self, terrain: str, skill: str, param: str) -> float | None:
        return self._defaults.get((terrain, skill, param))

    def ranked(self, terrain: str, skills: list[str]) -> list[str]:
        return sorted(skills, key=lambda s: (-self.preference(terrain, s), s))

    def top_skills(self, limit: int = 3) -> dict[str, list[dict[str, Any]]]:
        """Highest-scoring skills per terrain, for status displays."""
        by_terrain: dict[str, list[tuple[str, float]]] = {}
        for (terrain, skill), score in self._scores.items():
            by_terrain.setdefault(terrain, []).append((skill, score))
        return {
            terrain: [
                {"skill": skill, "score": score}
                for skill, score in sorted(pairs, key=lambda p: (-p[1], p[0]))[:limit]
            ]
            for terrain, pairs in sorted(by_terrain.items())
        }

    # -- writes ------------------------------------------------------------

    def update_preference(self, terrain: str, skill: str, outcome: float) -> float:
        if not 0.0 <= outcome <= 1.0:
            raise OutOfRange(f"outcome must be in [0, 1], got {outcome}")
        old = self.preference(terrain, skill)
        new = (1.0 - self.alpha) * old + self.alpha * outcome
        self._scores[(terrain, skill)] = new
        return new

    def update_param_default(
        self,
        terrain: str,
        skill: str,
        spec: ParameterSpec,
        value_used: float,
        success: bool,
    ) -> float | None:
        """Attract the stored default toward a successfully used value.

        Failures deliberately leave defaults untouched: a bad outcome
        says little about which parameter value would have been better.
        """
        if not spec.contains(float(value_used)):
            raise OutOfRange(
                f"{skill}.{spec.name}: {value_used} outside [{spec.lower_bound}, {spec.upper_bound}]"
            )
        if not success:
            return None
        key = (terrain, skill, spec.name)
        current = self._defaults.get(key, spec.default)
        new = current + self.beta * (float(value_used) - current)
        new = min(max(new, spec.lower_bound), spec.upper_bound)
        self._defaults[key] = new
        return new

    # -- record / feedback ingestion ----------------------------------------

    def apply_outcome(self, record: ExecutionRecord, registry: SkillRegistry) -> list[AppliedUpdate]:
        """Fold one execution record into the store.

        Preemption is nobody's fault and applies no update.
        """
        if record.outcome not in (OUTCOME_COMPLETED, OUTCOME_ERROR):
            return []
        updates = []
        success = record.outcome == OUTCOME_COMPLETED
        score = self.update_preference(record.terrain, record.skill, 1.0 if success else 0.0)
        updates.append(AppliedUpdate("preference", record.terrain, record.skill, None, score))
        if success:
            updates.extend(self._attract_params(record, registry))
        return updates

    def _attract_params(self, record: ExecutionRecord, registry: SkillRegistry) -> list[AppliedUpdate]:
        updates = []
        try:
            template = registry.lookup(record.skill)
        except UnknownSkill:
            return []
        for name, value in record.params.items():
            spec = template.parameter(name)
            if spec is None:
                continue
            new = self.update_param_default(record.terrain, record.skill, spec, value, success=True)
            if new is not None:
                updates.append(AppliedUpdate("param_default", record.terrain, record.skill, name, new))
        return updates

    def ingest_feedback(
        self, verdict: str, records: list[ExecutionRecord], registry: SkillRegistry
    ) -> list[AppliedUpdate]:
        """Fold an operator verdict over a plan's executed steps.

        Approval counts each completed step as one more success (and
        re-attracts its parameters); rejection counts each completed
        step as a failure.  Steps that already errored carry no extra
        signal.
        """
        if verdict not in (APPROVE, REJECT):
            raise ValueError(f"verdict must be {APPROVE!r} or {REJECT!r}")
        updates = []
        for record in records:
            if record.outcome != OUTCOME_COMPLETED:
                continue
            outcome = 1.0 if verdict == APPROVE else 0.0
            score = self.update_preference(record.terrain, record.skill, outcome)
            updates.append(AppliedUpdate("preference", record.terrain, record.skill, None, score))
            if verdict == APPROVE:
                updates.extend(self._attract_params(record, registry))
        return updates

    # -- persistence ----------------------------------------------------------

    def to_obj(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "scores": [
                {"terrain": t, "skill": s, "score": v} for (t, s), v in sorted(self._scores.items())
            ],
            "defaults": [
                {"terrain": t, "skill": s, "param": p, "value": v}
                for (t, s, p), v in sorted(self._defaults.items())
            ],
        }

    def save(self, directory: str | Path) -> Path:
        target = Path(directory)
        target.mkdir(parents=True, exist_ok=True)
        path = target / STATE_FILENAME
        path.write_text(json.dumps(self.to_obj(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, directory: str | Path) -> "PreferenceStore":
        path = Path(directory) / STATE_FILENAME
        doc = json.loads(path.read_text())
        store = cls(alpha=doc["alpha"], beta=doc["beta"])
        for item in doc["scores"]:
            store._scores[(item["terrain"], item["skill"])] = float(item["score"])
        for item in doc["defaults"]:
            store._defaults[(item["terrain"], item["skill"], item["param"])] = float(item["value"])
        return store
