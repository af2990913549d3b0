"""Safety envelope: pure state assessment plus the e-stop monitor.

``assess`` is a pure function of a robot state and the limits; the
monitor subscribes it to the simulator's tick hooks and latches the
e-stop the moment any check fails.  The engine's tick ordering then
guarantees no actuation on the tick after the trip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from opengo.sim.core import Simulator
from opengo.sim.model import RobotState
from opengo.skills.model import MIN_BATTERY, SkillTemplate

TILT_LIMIT = "TILT_LIMIT"
COLLISION = "COLLISION"
BATTERY_CUTOFF = "BATTERY_CUTOFF"
CONSTRAINT_RUNTIME_VIOLATION = "CONSTRAINT_RUNTIME_VIOLATION"


@dataclass(frozen=True)
class SafetyLimits:
    tilt_limit_rad: float = 0.9
    battery_cutoff_pct: float = 5.0


@dataclass(frozen=True)
class Reason:
    code: str
    detail: str


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    reasons: tuple[Reason, ...] = ()


def assess(state: RobotState, limits: SafetyLimits | None = None) -> SafetyVerdict:
    """Pure safety check of one state against the limits."""
    limits = limits or SafetyLimits()
    reasons: list[Reason] = []
    if state.tilt > limits.tilt_limit_rad:
        reasons.append(Reason(TILT_LIMIT, f"tilt {state.tilt:.3f} rad exceeds {limits.tilt_limit_rad}"))
    if state.collision:
        reasons.append(Reason(COLLISION, "collision flag set"))
    if state.battery_pct < limits.battery_cutoff_pct:
        reasons.append(
            Reason(BATTERY_CUTOFF, f"battery {state.battery_pct:.2f}% below {limits.battery_cutoff_pct}%")
        )
    return SafetyVerdict(safe=not reasons, reasons=tuple(reasons))


@dataclass
class SafetyTrip:
    tick: int
    verdict: SafetyVerdict


class SafetyMonitor:
    """Watches every simulator tick and latches the e-stop on violations.

    While a skill runs, ``watch`` points the monitor at its template so
    template-level minimum-battery constraints are enforced mid-run as
    CONSTRAINT_RUNTIME_VIOLATION (terrain exits are already terminal in
    the engine itself).
    """

    def __init__(self, sim: Simulator, limits: SafetyLimits | None = None) -> None:
        self.sim = sim
        self.limits = limits or SafetyLimits()
        self.trips: list[SafetyTrip] = []
        self._active: SkillTemplate | None = None
        sim.add_tick_hook(self.on_tick)

    def watch(self, template: SkillTemplate | None) -> None:
        self._active = template

    def on_tick(self, state: RobotState) -> None:
        verdict = assess(state, self.limits)
        reasons = list(verdict.reasons)
        if self._active is not None:
            for constraint in self._active.constraints_of(MIN_BATTERY):
                threshold = float(constraint.payload)
                if state.battery_pct < threshold:
                    reasons.append(
                        Reason(
                            CONSTRAINT_RUNTIME_VIOLATION,
                            f"battery {state.battery_pct:.2f}% below skill minimum {threshold}%",
                        )
                    )
        if reasons:
            self.trips.append(SafetyTrip(state.tick, SafetyVerdict(False, tuple(reasons))))
            # idempotent: latching twice is a no-op
            self.sim.trigger_estop()
