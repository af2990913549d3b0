"""Kinematic simulation of the quadruped on a 2-D terrain grid."""

from opengo.sim.core import SimConfig, Simulator
from opengo.sim.model import (
    Posture,
    RobotState,
    Scenario,
    SkillOutcome,
    TerrainClass,
    wrap_angle,
)
from opengo.sim.world import TerrainGrid

__all__ = [
    "Posture",
    "RobotState",
    "Scenario",
    "SimConfig",
    "SkillOutcome",
    "Simulator",
    "TerrainClass",
    "TerrainGrid",
    "wrap_angle",
]
