"""Built-in skill executors.

Each executor maps elapsed time into a closed-form pose, so per-tick
integration never accumulates floating-point drift: the tick engine asks
for the pose at a given progress instant and the executor computes it
from the run's start snapshot.  The final tick is evaluated exactly at
the commanded duration, which makes completed translations and rotations
analytically exact.

Executors also carry a versioned behavior descriptor; its SHA-256 is the
function digest that skill documents must quote.  Changing an executor's
observable behavior means bumping ``version``, which changes the digest
and forces re-review of any document that referenced the old one.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

from opengo.errors import OutOfRange
from opengo.sim.model import Posture, RobotState

Params = dict[str, float]


@dataclass(frozen=True)
class Pose:
    """Pose fields an executor controls at a given progress instant."""

    x: float
    y: float
    heading: float
    posture: Posture
    roll: float = 0.0
    pitch: float = 0.0


class Executor:
    """Base class; subclasses define one behavior each."""

    name: str = ""
    version: str = "v1"
    summary: str = ""
    consumes: tuple[str, ...] = ()
    start_postures: frozenset[Posture] = frozenset({Posture.STANDING})
    drain_pct_per_s: float = 0.0
    burst_pct: float = 0.0
    #: translation executors honor the slip fault's motion scale
    slips: bool = False

    def descriptor(self) -> str:
        return (
            f"{self.name}/{self.version}: {self.summary}; "
            f"consumes={','.join(self.consumes) or '-'}; "
            f"drain={self.drain_pct_per_s}%/s; burst={self.burst_pct}%"
        )

    def digest(self) -> str:
        return "sha256:" + hashlib.sha256(self.descriptor().encode()).hexdigest()

    def check_params(self, params: Params) -> None:
        for key in self.consumes:
            if key not in params:
                raise OutOfRange(f"{self.name}: missing parameter {key!r}")
            value = params[key]
            if not isinstance(value, (int, float)) or not math.isfinite(float(value)):
                raise OutOfRange(f"{self.name}: parameter {key!r}={value!r} is not a finite number")

    def duration_s(self, params: Params) -> float:
        raise NotImplementedError

    def done(self, t: float, params: Params) -> bool:
        """Whether the run is complete at progress instant ``t``.

        The tick budget in the engine exists to catch overrides of this
        that never return True.
        """
        return t >= self.duration_s(params)

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        raise NotImplementedError


def _hold(start: RobotState, posture: Posture | None = None) -> Pose:
    return Pose(start.x, start.y, start.heading, posture or start.posture, start.roll, start.pitch)


class MoveForward(Executor):
    name = "move_forward"
    summary = "straight-line walk along the current heading at constant speed"
    consumes = ("distance", "speed")
    drain_pct_per_s = 0.5
    slips = True

    def check_params(self, params: Params) -> None:
        super().check_params(params)
        if params["distance"] <= 0 or params["speed"] <= 0:
            raise OutOfRange(f"{self.name}: distance and speed must be positive")

    def duration_s(self, params: Params) -> float:
        return params["distance"] / params["speed"]

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        travel = min(params["speed"] * t, params["distance"]) * motion_scale
        return Pose(
            start.x + travel * math.cos(start.heading),
            start.y + travel * math.sin(start.heading),
            start.heading,
            Posture.STANDING,
        )


class Turn(Executor):
    name = "turn"
    summary = "in-place yaw rotation at constant rate, signed angle"
    consumes = ("angle", "rate")
    drain_pct_per_s = 0.3

    def check_params(self, params: Params) -> None:
        super().check_params(params)
        if params["rate"] <= 0:
            raise OutOfRange(f"{self.name}: rate must be positive")

    def duration_s(self, params: Params) -> float:
        return abs(params["angle"]) / params["rate"]

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        from opengo.sim.model import wrap_angle

        swept = math.copysign(min(params["rate"] * t, abs(params["angle"])), params["angle"])
        return Pose(start.x, start.y, wrap_angle(start.heading + swept), Posture.STANDING)


class Backflip(Executor):
    name = "backflip"
    summary = "in-place flip: launch, airborne pitch excursion to 0.8 rad, land standing"
    drain_pct_per_s = 1.0
    burst_pct = 3.0

    _DURATION = 1.2

    def duration_s(self, params: Params) -> float:
        return self._DURATION

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        frac = min(t / self._DURATION, 1.0)
        pitch = 0.8 * math.sin(math.pi * frac)
        airborne = 0.2 <= t < 1.0
        posture = Posture.MID_AIR if airborne else Posture.STANDING
        if t >= self._DURATION:
            pitch = 0.0
        return Pose(start.x, start.y, start.heading, posture, 0.0, pitch)


class Dance(Executor):
    name = "dance"
    summary = "in-place rhythmic sway; style selects the sway pattern"
    consumes = ("duration", "tempo", "style")
    drain_pct_per_s = 0.8

    def check_params(self, params: Params) -> None:
        super().check_params(params)
        if params["duration"] <= 0 or params["tempo"] <= 0:
            raise OutOfRange(f"{self.name}: duration and tempo must be positive")

    def duration_s(self, params: Params) -> float:
        return params["duration"]

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        from opengo.sim.model import wrap_angle

        total = params["duration"]
        # envelope ramps in and out so every run ends at the start pose
        envelope = max(0.0, min(t, total - t, 1.0))
        phase = 2.0 * math.pi * params["tempo"] * t
        style = int(params["style"])
        sway = 0.05 * (1 + style)
        return Pose(
            start.x,
            start.y,
            wrap_angle(start.heading + 0.2 * envelope * math.sin(phase)),
            Posture.STANDING,
            sway * envelope * math.sin(phase + math.pi / 2),
            0.0,
        )


class Stand(Executor):
    name = "stand"
    summary = "rise to a neutral standing pose, relaxing roll and pitch"
    drain_pct_per_s = 0.2
    start_postures = frozenset({Posture.STANDING, Posture.CROUCHED})

    _DURATION = 0.4

    def duration_s(self, params: Params) -> float:
        return self._DURATION

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        frac = min(t / self._DURATION, 1.0)
        posture = Posture.STANDING if frac >= 0.5 else start.posture
        return Pose(
            start.x,
            start.y,
            start.heading,
            posture,
            start.roll * (1.0 - frac),
            start.pitch * (1.0 - frac),
        )


class Crouch(Executor):
    name = "crouch"
    summary = "lower into a crouch; depth stretches the settle time"
    consumes = ("depth",)
    drain_pct_per_s = 0.2
    start_postures = frozenset({Posture.STANDING, Posture.CROUCHED})

    def check_params(self, params: Params) -> None:
        super().check_params(params)
        if params["depth"] <= 0:
            raise OutOfRange(f"{self.name}: depth must be positive")

    def duration_s(self, params: Params) -> float:
        return 0.5 + params["depth"]

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        frac = min(t / self.duration_s(params), 1.0)
        posture = Posture.CROUCHED if frac >= 0.5 else start.posture
        return Pose(start.x, start.y, start.heading, posture, start.roll, start.pitch)


class ClimbStairs(Executor):
    name = "climb_stairs"
    summary = "ascend stair cells step by step, 0.25 m per step along heading"
    consumes = ("steps", "pace")
    drain_pct_per_s = 1.0
    slips = True

    _STEP_LENGTH_M = 0.25
    _CLIMB_PITCH = 0.25

    def check_params(self, params: Params) -> None:
        super().check_params(params)
        if params["steps"] < 1 or params["pace"] <= 0:
            raise OutOfRange(f"{self.name}: steps must be >= 1 and pace positive")

    def duration_s(self, params: Params) -> float:
        return params["steps"] / params["pace"]

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        total = params["steps"] * self._STEP_LENGTH_M
        travel = min(self._STEP_LENGTH_M * params["pace"] * t, total) * motion_scale
        done = t >= self.duration_s(params)
        return Pose(
            start.x + travel * math.cos(start.heading),
            start.y + travel * math.sin(start.heading),
            start.heading,
            Posture.STANDING,
            0.0,
            0.0 if done else self._CLIMB_PITCH,
        )


class Stop(Executor):
    name = "stop"
    summary = "hold position and settle; an explicit no-motion checkpoint"
    drain_pct_per_s = 0.1
    start_postures = frozenset(Posture)

    _DURATION = 0.1

    def duration_s(self, params: Params) -> float:
        return self._DURATION

    def pose_at(self, t: float, start: RobotState, params: Params, motion_scale: float) -> Pose:
        return _hold(start)


BUILTIN_EXECUTORS: dict[str, Executor] = {
    executor.name: executor
    for executor in (
        MoveForward(),
        Turn(),
        Backflip(),
        Dance(),
        Stand(),
        Crouch(),
        ClimbStairs(),
        Stop(),
    )
}
