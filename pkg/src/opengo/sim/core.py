"""Tick-level simulation engine.

The engine advances at 50 ticks per second of simulated time.  A skill
run is a loop of: check for preemption, apply the executor's pose for
this instant, drain battery, evaluate faults and terrain, then hand the
fresh state to any registered tick hooks (the safety monitor attaches
here).  Because preemption is checked before actuation, a hook that
latches the e-stop at tick *t* guarantees no actuation from tick *t+1*
onward.
"""

from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from opengo.errors import EstopLatched, OutOfMap, UnknownSkill
from opengo.sim import model
from opengo.sim.executors import BUILTIN_EXECUTORS, Executor
from opengo.sim.model import (
    ERR_EXECUTOR_FAULT,
    ERR_INVALID_POSTURE,
    ERR_OUT_OF_MAP,
    ERR_PREEMPTED,
    ERR_TERRAIN_MISMATCH,
    ERR_TIMEOUT,
    Posture,
    RobotState,
    Scenario,
    SkillOutcome,
    TerrainClass,
)
from opengo.sim.world import TerrainGrid

#: fraction of commanded translation actually covered under the slip fault
SLIP_MOTION_SCALE = 0.7
#: battery drain multiplier under the battery_drain fault
DRAIN_FAULT_MULTIPLIER = 5.0
#: how close the robot must pass to a collision_at point to register a hit
COLLISION_RADIUS_M = 0.25

DEFAULT_MAP = Path(__file__).parent / "maps" / "arena.txt"

TickHook = Callable[[RobotState], None]


@dataclass(frozen=True)
class SimConfig:
    """Initial conditions for a simulation session."""

    map_path: str | Path = DEFAULT_MAP
    start_x: float = 0.0
    start_y: float = 0.0
    start_heading: float = 0.0
    start_posture: Posture = Posture.STANDING
    battery_pct: float = 100.0
    seed: int = 0

    def initial_state(self) -> RobotState:
        return RobotState(
            x=self.start_x,
            y=self.start_y,
            heading=model.wrap_angle(self.start_heading),
            posture=self.start_posture,
            battery_pct=self.battery_pct,
        )


@dataclass
class Fault:
    kind: str
    x: float = 0.0
    y: float = 0.0
    skill: str = ""
    probability: float = 1.0
    seed: int = 0
    rng: random.Random = field(default_factory=random.Random, repr=False)


class Simulator:
    """One robot on one terrain grid."""

    def __init__(self, config: SimConfig | None = None, grid: TerrainGrid | None = None) -> None:
        self.config = config or SimConfig()
        self.grid = grid or TerrainGrid.from_file(self.config.map_path)
        self._state = self.config.initial_state()
        if not self.grid.contains(self._state.x, self._state.y):
            raise OutOfMap("start position lies outside the map")
        self._preempt = threading.Event()
        self._faults: list[Fault] = []
        self._hooks: list[TickHook] = []
        self.executors: dict[str, Executor] = dict(BUILTIN_EXECUTORS)

    # -- state access ----------------------------------------------------------

    @property
    def state(self) -> RobotState:
        return self._state.copy()

    def scene_class(self, state: RobotState | None = None) -> TerrainClass:
        probe = state or self._state
        return self.grid.class_at(probe.x, probe.y)

    def scenario(self) -> Scenario:
        return Scenario(terrain=self.scene_class(), grid=self.grid)

    def reset(self, config: SimConfig | None = None) -> None:
        """Respawn at a config's start pose; faults and latches survive a plain reset."""
        if config is not None:
            self.config = config
            if Path(config.map_path) != Path(self.config.map_path) or self.grid is None:
                self.grid = TerrainGrid.from_file(config.map_path)
        self._state = self.config.initial_state()
        self._state.estop = self._preempt.is_set()

    # -- e-stop ----------------------------------------------------------------

    @property
    def estop_latched(self) -> bool:
        return self._preempt.is_set()

    def trigger_estop(self) -> None:
        """Latch the e-stop.  Idempotent and safe to call from any thread."""
        self._preempt.set()
        self._state.estop = True

    def resume(self) -> None:
        """Clear the latch.  Only an explicit operator action calls this."""
        self._preempt.clear()
        self._state.estop = False

    # -- fault injection -------------------------------------------------------

    def inject_fault(self, kind: str, **payload: float | str | int) -> None:
        if kind not in {"slip", "battery_drain", "collision_at", "executor_fail"}:
            raise ValueError(f"unknown fault kind {kind!r}")
        fault = Fault(kind=kind, **payload)  # type: ignore[arg-type]
        if kind == "executor_fail":
            fault.rng = random.Random(fault.seed)
        self._faults.append(fault)

    def clear_faults(self) -> None:
        self._faults.clear()

    def _fault(self, kind: str) -> Fault | None:
        for fault in self._faults:
            if fault.kind == kind:
                return fault
        return None

    # -- hooks -----------------------------------------------------------------

    def add_tick_hook(self, hook: TickHook) -> None:
        self._hooks.append(hook)

    # -- execution -------------------------------------------------------------

    def execute_skill(
        self,
        executor_name: str,
        params: dict[str, float],
        required_terrain: frozenset[TerrainClass] | None = None,
        skill_id: str | None = None,
    ) -> SkillOutcome:
        """Run one skill to a terminal outcome.

        ``required_terrain`` is the owning template's terrain constraint;
        leaving it mid-run fails the step with TERRAIN_MISMATCH.
        ``skill_id`` is only used to match executor_fail faults when a
        template's head differs from its executor name.
        """
        if self._preempt.is_set():
            raise EstopLatched("e-stop is latched; resume before executing")
        try:
            executor = self.executors[executor_name]
        except KeyError:
            raise UnknownSkill(f"no executor named {executor_name!r}") from None

        executor.check_params(params)
        state = self._state
        if state.posture not in executor.start_postures:
            return SkillOutcome.error(ERR_INVALID_POSTURE, state.copy(), 0, (state.copy(),))

        duration = executor.duration_s(params)
        budget = math.ceil(duration * model.TICK_HZ) + 10
        start = state.copy()
        states: list[RobotState] = [start]

        motion_scale = 1.0
        slip = self._fault("slip")
        if slip is not None and executor.slips and self.scene_class() is TerrainClass.ROUGH:
            motion_scale = SLIP_MOTION_SCALE

        drain_scale = DRAIN_FAULT_MULTIPLIER if self._fault("battery_drain") else 1.0

        fail_tick = 0
        exec_fault = self._fault("executor_fail")
        if exec_fault is not None and exec_fault.skill in (executor_name, skill_id):
            if exec_fault.rng.random() < exec_fault.probability:
                fail_tick = max(1, min(5, budget // 2))

        collision_fault = self._fault("collision_at")

        tick_local = 0
        outcome: SkillOutcome | None = None
        while outcome is None:
            if self._preempt.is_set():
                state.estop = True
                outcome = SkillOutcome.error(ERR_PREEMPTED, state.copy(), tick_local, tuple(states))
                break

            tick_local += 1
            t = min(tick_local * model.TICK_DT, duration)
            pose = executor.pose_at(t, start, params, motion_scale)
            if not self.grid.contains(pose.x, pose.y):
                outcome = SkillOutcome.error(ERR_OUT_OF_MAP, state.copy(), tick_local, tuple(states))
                break

            state.x, state.y, state.heading = pose.x, pose.y, pose.heading
            state.posture, state.roll, state.pitch = pose.posture, pose.roll, pose.pitch
            drain = executor.drain_pct_per_s * model.TICK_DT * drain_scale
            if tick_local == 1:
                drain += executor.burst_pct
            state.battery_pct = max(0.0, state.battery_pct - drain)
            state.tick += 1

            if collision_fault is not None:
                if math.hypot(state.x - collision_fault.x, state.y - collision_fault.y) <= COLLISION_RADIUS_M:
                    state.collision = True

            states.append(state.copy())

            if fail_tick and tick_local == fail_tick:
                outcome = SkillOutcome.error(ERR_EXECUTOR_FAULT, state.copy(), tick_local, tuple(states))
                break

            if required_terrain is not None and self.scene_class() not in required_terrain:
                outcome = SkillOutcome.error(ERR_TERRAIN_MISMATCH, state.copy(), tick_local, tuple(states))
                break

            for hook in self._hooks:
                hook(state.copy())

            if executor.done(t, params):
                outcome = SkillOutcome.completed(state.copy(), tick_local, tuple(states))
            elif tick_local >= budget:
                outcome = SkillOutcome.error(ERR_TIMEOUT, state.copy(), tick_local, tuple(states))

        return outcome
