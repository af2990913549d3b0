"""Core value types for the simulated robot."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

TICK_HZ = 50
TICK_DT = 1.0 / TICK_HZ
CELL_SIZE_M = 0.5


class TerrainClass(str, Enum):
    """Cell classes of the terrain grid, keyed by their map letters."""

    FLAT = "flat"
    ROUGH = "rough"
    STAIRS_UP = "stairs_up"
    STAIRS_DOWN = "stairs_down"
    OBSTACLE = "obstacle"
    NARROW = "narrow"

    @property
    def letter(self) -> str:
        return _CLASS_TO_LETTER[self]

    @classmethod
    def from_letter(cls, letter: str) -> "TerrainClass":
        try:
            return _LETTER_TO_CLASS[letter]
        except KeyError:
            raise ValueError(f"unknown terrain letter {letter!r}") from None


_LETTER_TO_CLASS = {
    "F": TerrainClass.FLAT,
    "R": TerrainClass.ROUGH,
    "U": TerrainClass.STAIRS_UP,
    "D": TerrainClass.STAIRS_DOWN,
    "O": TerrainClass.OBSTACLE,
    "N": TerrainClass.NARROW,
}
_CLASS_TO_LETTER = {v: k for k, v in _LETTER_TO_CLASS.items()}


class Posture(str, Enum):
    STANDING = "standing"
    CROUCHED = "crouched"
    MID_AIR = "mid_air"
    FALLEN = "fallen"


def wrap_angle(angle: float) -> float:
    """Normalize an angle in radians to the half-open interval (-pi, pi]."""
    wrapped = math.fmod(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    elif wrapped > math.pi:
        wrapped -= 2.0 * math.pi
    return wrapped


@dataclass
class RobotState:
    """Full kinematic state, sampled once per tick.

    ``heading``, ``roll`` and ``pitch`` are radians; heading stays
    normalized to (-pi, pi].  ``battery_pct`` only ever decreases while a
    skill runs.
    """

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    posture: Posture = Posture.STANDING
    roll: float = 0.0
    pitch: float = 0.0
    battery_pct: float = 100.0
    collision: bool = False
    estop: bool = False
    tick: int = 0

    def copy(self) -> "RobotState":
        return replace(self)

    @property
    def tilt(self) -> float:
        """Largest absolute body angle, used by the tilt check."""
        return max(abs(self.roll), abs(self.pitch))

    def to_dict(self) -> dict[str, Any]:
        return {
            "x": self.x,
            "y": self.y,
            "heading": self.heading,
            "posture": self.posture.value,
            "roll": self.roll,
            "pitch": self.pitch,
            "battery_pct": self.battery_pct,
            "collision": self.collision,
            "estop": self.estop,
            "tick": self.tick,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RobotState":
        return cls(
            x=float(data["x"]),
            y=float(data["y"]),
            heading=float(data["heading"]),
            posture=Posture(data["posture"]),
            roll=float(data.get("roll", 0.0)),
            pitch=float(data.get("pitch", 0.0)),
            battery_pct=float(data["battery_pct"]),
            collision=bool(data.get("collision", False)),
            estop=bool(data.get("estop", False)),
            tick=int(data.get("tick", 0)),
        )


@dataclass(frozen=True)
class Scenario:
    """What the robot currently stands on, plus the grid it came from."""

    terrain: TerrainClass
    grid: Any = field(compare=False, repr=False, default=None)

    def to_dict(self) -> dict[str, Any]:
        return {"terrain": self.terrain.value}


@dataclass(frozen=True)
class SkillOutcome:
    """Terminal result of one skill execution.

    ``status`` is ``completed`` or ``error``; errors carry a stable
    ``error_code``.  ``PREEMPTED`` marks runs cut short by the e-stop.
    """

    status: str  # "completed" | "error"
    error_code: str | None
    final_state: RobotState
    ticks: int
    states: tuple[RobotState, ...] = field(repr=False, default=())

    COMPLETED = "completed"
    ERROR = "error"

    @property
    def ok(self) -> bool:
        return self.status == self.COMPLETED

    @classmethod
    def completed(cls, final: RobotState, ticks: int, states: tuple[RobotState, ...]) -> "SkillOutcome":
        return cls(cls.COMPLETED, None, final, ticks, states)

    @classmethod
    def error(cls, code: str, final: RobotState, ticks: int, states: tuple[RobotState, ...]) -> "SkillOutcome":
        return cls(cls.ERROR, code, final, ticks, states)


# Stable error codes surfaced by the simulator.
ERR_TIMEOUT = "TIMEOUT"
ERR_TERRAIN_MISMATCH = "TERRAIN_MISMATCH"
ERR_OUT_OF_MAP = "OUT_OF_MAP"
ERR_INVALID_POSTURE = "INVALID_POSTURE"
ERR_EXECUTOR_FAULT = "EXECUTOR_FAULT"
ERR_PREEMPTED = "PREEMPTED"
ERR_COLLISION = "COLLISION"
