from __future__ import annotations

import pytest

from opengo.sim.core import SimConfig, Simulator
from opengo.sim.model import TerrainClass
from opengo.skills.library import build_registry, spawn_config
from opengo.skills.registry import SkillRegistry


@pytest.fixture(scope="session")
def registry() -> SkillRegistry:
    """The shipped library, admitted once through the real pipeline."""
    return build_registry()


@pytest.fixture
def flat_sim() -> Simulator:
    return Simulator(SimConfig(start_x=0.25, start_y=0.25))


@pytest.fixture
def stairs_sim() -> Simulator:
    return Simulator(spawn_config(TerrainClass.STAIRS_UP))
