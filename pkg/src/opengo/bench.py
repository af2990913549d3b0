"""Latency harness over the real dispatch path.

Nothing here is a stopwatch around fake work: trials run the actual
runtime (context building, planning, validation, precheck, execution)
with a backend wrapper that spends configurable wall-clock time the way
a remote planner and skill loader would.  The wrapper's knobs:

* ``base_ms`` + ``per_candidate_ms`` x candidate count — prompt cost,
* ``per_step_ms`` + ``per_param_ms`` x declared parameter count per
  step — plan-shaping cost (more tunables, more deliberation),
* ``skill_load_ms`` — once per skill per session, a cold-start cost that
  a session cache absorbs on later uses,
* coordination (scheduling / transition / dependency) — spent by the
  runtime between consecutive steps of one plan.

Measured latencies come from execution-record timestamps on the
monotonic clock, never the wall clock.

Single-skill latency is instruction to first actuation.  Composition
latency is a plan's total non-execution time: instruction to first
actuation plus every inter-step gap.
"""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import yaml

from opengo.dispatch.backends import PlannerBackend, RuleBackend
from opengo.dispatch.model import PlannerContext
from opengo.dispatch.wire import parse_plan_text
from opengo.errors import MalformedReply
from opengo.memory import ExecutionRecord
from opengo.runtime import CoordinationModel, RuntimeSettings, SessionRuntime
from opengo.sim.core import SimConfig, Simulator
from opengo.sim.model import TerrainClass
from opengo.skills.library import spawn_config
from opengo.skills.registry import SkillRegistry

CSV_HEADER = ["label", "skills", "param_count", "rep", "cold", "latency_ms"]


@dataclass(frozen=True)
class DelayModel:
    base_ms: float = 20.0
    per_candidate_ms: float = 2.0
    per_step_ms: float = 8.0
    per_param_ms: float = 8.0
    skill_load_ms: float = 80.0
    coordination: CoordinationModel = field(
        default_factory=lambda: CoordinationModel(
            scheduling_ms=25.0, transition_ms=18.0, dependency_ms=12.0
        )
    )

    @classmethod
    def from_yaml(cls, path: str | Path) -> "DelayModel":
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if "coordination" in doc:
            doc["coordination"] = CoordinationModel(**doc.pop("coordination"))
        return cls(**doc)


class DelayedBackend:
    """Wraps a planner backend and spends the modeled planning time.

    The session cache of loaded skills persists across calls until
    ``flush``; the first plan touching a skill pays ``skill_load_ms``.
    """

    def __init__(self, inner: PlannerBackend, model: DelayModel) -> None:
        self.inner = inner
        self.model = model
        self.loaded: set[str] = set()

    @property
    def kind(self) -> str:
        return self.inner.kind

    def flush(self) -> None:
        self.loaded.clear()

    def mark_loaded(self, skills: Sequence[str]) -> None:
        self.loaded.update(skills)

    def _declared_param_count(self, context: PlannerContext, skill: str) -> int:
        for candidate in context.candidates:
            if candidate["skill"] == skill:
                return len(candidate["parameters"])
        return 0

    def propose(self, context: PlannerContext) -> str:
        reply = self.inner.propose(context)
        delay_ms = self.model.base_ms + self.model.per_candidate_ms * len(context.candidates)
        try:
            steps = parse_plan_text(reply)
        except MalformedReply:
            steps = []
        for step in steps:
            delay_ms += self.model.per_step_ms
            delay_ms += self.model.per_param_ms * self._declared_param_count(context, step.skill)
            if step.skill not in self.loaded:
                delay_ms += self.model.skill_load_ms
                self.loaded.add(step.skill)
        time.sleep(delay_ms / 1000.0)
        return reply


@dataclass(frozen=True)
class TrialResult:
    label: str
    kind: str  # "single" | "composition"
    skills: tuple[str, ...]
    param_count: int
    rep: int
    cold: bool
    latency_ms: float
    plan_id: str

    def to_row(self) -> list:
        return [
            self.label,
            "+".join(self.skills),
            self.param_count,
            self.rep,
            int(self.cold),
            f"{self.latency_ms:.3f}",
        ]

    def to_obj(self) -> dict:
        return {
            "label": self.label,
            "kind": self.kind,
            "skills": list(self.skills),
            "param_count": self.param_count,
            "rep": self.rep,
            "cold": self.cold,
            "latency_ms": self.latency_ms,
            "plan_id": self.plan_id,
        }


#: lexicon phrasing that plans exactly one skill each
SINGLE_INSTRUCTIONS: dict[str, str] = {
    "backflip": "do a backflip",
    "climb_stairs": "climb the stairs",
    "crouch": "crouch",
    "dance": "dance",
    "move_forward": "move forward",
    "stand": "stand",
    "stop": "stop",
    "turn": "turn around",
}

#: composition instructions by plan length (2, 3, 4 skills)
COMPOSITIONS: list[tuple[str, str, tuple[str, ...]]] = [
    ("pair", "crouch then stand", ("crouch", "stand")),
    ("triple", "crouch then stand then do a backflip", ("crouch", "stand", "backflip")),
    (
        "quad",
        "crouch then stand then do a backflip then dance",
        ("crouch", "stand", "backflip", "dance"),
    ),
]


def _spawn_for(skill: str) -> SimConfig:
    if skill == "climb_stairs":
        return spawn_config(TerrainClass.STAIRS_UP)
    return spawn_config(TerrainClass.FLAT)


def _runtime(
    registry: SkillRegistry, config: SimConfig, backend: DelayedBackend, model: DelayModel
) -> SessionRuntime:
    return SessionRuntime(
        registry,
        Simulator(config),
        backend=backend,
        settings=RuntimeSettings(coordination=model.coordination),
    )


def _start_latency_ms(record: ExecutionRecord) -> float:
    return (record.t_execution_start_ns - record.t_instruction_ns) / 1e6


def run_single_trials(
    registry: SkillRegistry,
    model: DelayModel | None = None,
    reps: int = 10,
    skills: Sequence[str] | None = None,
) -> list[TrialResult]:
    """Per-skill dispatch latency; rep 0 of each skill runs cold."""
    model = model or DelayModel()
    backend = DelayedBackend(RuleBackend(), model)
    trials: list[TrialResult] = []
    for skill in skills or sorted(SINGLE_INSTRUCTIONS):
        instruction = SINGLE_INSTRUCTIONS[skill]
        param_count = len(registry.lookup(skill).parameters)
        backend.flush()
        for rep in range(reps):
            cold = skill not in backend.loaded
            runtime = _runtime(registry, _spawn_for(skill), backend, model)
            result = runtime.handle_instruction(instruction)
            if result.status != "completed" or not result.records:
                raise RuntimeError(f"bench trial {skill} rep {rep} ended {result.status}")
            trials.append(
                TrialResult(
                    label=skill,
                    kind="single",
                    skills=(skill,),
                    param_count=param_count,
                    rep=rep,
                    cold=cold,
                    latency_ms=_start_latency_ms(result.records[0]),
                    plan_id=result.plans[0].plan_id,
                )
            )
    return trials


def composed_latency_ms(records: list[ExecutionRecord]) -> float:
    """Total non-execution latency of one plan's records."""
    ordered = sorted(records, key=lambda r: r.step_index)
    total = _start_latency_ms(ordered[0])
    for previous, current in zip(ordered, ordered[1:]):
        total += max(0.0, (current.t_execution_start_ns - previous.t_execution_end_ns) / 1e6)
    return total


def run_composition_trials(
    registry: SkillRegistry,
    model: DelayModel | None = None,
    reps: int = 5,
) -> list[TrialResult]:
    """Multi-skill plans in a stable (fully warmed) session."""
    model = model or DelayModel()
    backend = DelayedBackend(RuleBackend(), model)
    backend.mark_loaded(list(SINGLE_INSTRUCTIONS))
    trials: list[TrialResult] = []
    for label, instruction, skills in COMPOSITIONS:
        param_count = sum(len(registry.lookup(s).parameters) for s in skills)
        for rep in range(reps):
            runtime = _runtime(registry, spawn_config(TerrainClass.FLAT), backend, model)
            result = runtime.handle_instruction(instruction)
            if result.status != "completed" or len(result.records) != len(skills):
                raise RuntimeError(f"bench composition {label} rep {rep} ended {result.status}")
            trials.append(
                TrialResult(
                    label=label,
                    kind="composition",
                    skills=skills,
                    param_count=param_count,
                    rep=rep,
                    cold=False,
                    latency_ms=composed_latency_ms(result.records),
                    plan_id=result.plans[0].plan_id,
                )
            )
    return trials


# -- aggregation and export -------------------------------------------------------


def mean_latency(trials: Sequence[TrialResult], **match) -> float:
    chosen = [t.latency_ms for t in trials if all(getattr(t, k) == v for k, v in match.items())]
    if not chosen:
        raise ValueError(f"no trials matching {match}")
    return statistics.fmean(chosen)


def summarize(singles: Sequence[TrialResult], compositions: Sequence[TrialResult]) -> dict:
    """Aggregates used by both the report figures and the trend checks."""
    by_skill = {}
    for skill in sorted({t.label for t in singles}):
        warm = mean_latency(singles, label=skill, cold=False)
        cold = mean_latency(singles, label=skill, cold=True)
        params = next(t.param_count for t in singles if t.label == skill)
        by_skill[skill] = {"cold_ms": cold, "warm_ms": warm, "param_count": params}

    by_params: dict[int, float] = {}
    for count in sorted({t.param_count for t in singles}):
        by_params[count] = mean_latency(
            [t for t in singles if not t.cold], param_count=count
        )

    comps = {}
    for label in sorted({t.label for t in compositions}):
        sample = next(t for t in compositions if t.label == label)
        constituent_sum = sum(by_skill[s]["warm_ms"] for s in sample.skills)
        composed = mean_latency(compositions, label=label)
        comps[label] = {
            "skills": list(sample.skills),
            "composed_ms": composed,
            "constituent_sum_ms": constituent_sum,
            "overhead_ms": composed - constituent_sum,
        }
    return {"singles": by_skill, "param_scaling": by_params, "compositions": comps}


def export_csv(trials: Sequence[TrialResult], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for trial in trials:
            writer.writerow(trial.to_row())
    return target


def export_json(trials: Sequence[TrialResult], path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps([t.to_obj() for t in trials], indent=2) + "\n")
    return target


def load_trials(path: str | Path) -> list[TrialResult]:
    doc = json.loads(Path(path).read_text())
    return [
        TrialResult(
            label=item["label"],
            kind=item["kind"],
            skills=tuple(item["skills"]),
            param_count=item["param_count"],
            rep=item["rep"],
            cold=item["cold"],
            latency_ms=item["latency_ms"],
            plan_id=item.get("plan_id", ""),
        )
        for item in doc
    ]
