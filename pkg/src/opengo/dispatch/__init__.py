"""Instruction-to-plan dispatch: contexts, backends, validation, retries."""

from opengo.dispatch.model import DispatchPlan, PlanFinding, PlannerContext, PlanStep, StepFeedback
from opengo.dispatch.planner import Dispatcher, DispatcherSettings

__all__ = [
    "DispatchPlan",
    "Dispatcher",
    "DispatcherSettings",
    "PlanFinding",
    "PlanStep",
    "PlannerContext",
    "StepFeedback",
]
