"""Timer-driven walking state machine: Idle -> Initialize -> SingleSupport <-> DoubleSupport."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

# Timer comparisons tolerate accumulated rounding of dt sums.
TIME_EPS = 1e-9


class WalkPhase(enum.Enum):
    IDLE = "idle"
    INITIALIZE = "initialize"
    SINGLE_SUPPORT = "single_support"
    DOUBLE_SUPPORT = "double_support"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT


@dataclass(frozen=True)
class PhaseClock:
    """Step-local timer. ``t`` restarts at every step boundary, keeping the residue."""

    t: float = 0.0
    T_ss: float = 0.8
    T_ds: float = 0.2
    T_init: float = 0.2
    stop_requested: bool = False

    @property
    def step_duration(self) -> float:
        return self.T_ss + self.T_ds


def initialize_duration(T_ds: float, fallback: float = 0.2) -> float:
    return T_ds if T_ds > 0.0 else fallback


def tick(phase: WalkPhase, clock: PhaseClock, dt: float, command: str | None = None):
    """Advance the machine by ``dt``.

    Returns ``(phase, clock, step_completed)``. ``command`` is ``"start"``,
    ``"stop"`` or ``None``; anything else is ignored. A stop is only honoured at
    a step boundary.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")

    if phase is WalkPhase.IDLE:
        if command == "start":
            return WalkPhase.INITIALIZE, replace(clock, t=0.0, stop_requested=False), False
        return phase, clock, False

    if command == "stop":
        clock = replace(clock, stop_requested=True)

    t = clock.t + dt
    if phase is WalkPhase.INITIALIZE:
        if t >= clock.T_init - TIME_EPS:
            t -= clock.T_init
            phase = WalkPhase.SINGLE_SUPPORT
        else:
            return phase, replace(clock, t=t), False

    completed = False
    if phase is WalkPhase.SINGLE_SUPPORT and t >= clock.T_ss - TIME_EPS:
        phase = WalkPhase.DOUBLE_SUPPORT
    if phase is WalkPhase.DOUBLE_SUPPORT and t >= clock.step_duration - TIME_EPS:
        t -= clock.step_duration
        completed = True
        if clock.stop_requested:
            return WalkPhase.IDLE, replace(clock, t=0.0, stop_requested=False), True
        phase = WalkPhase.SINGLE_SUPPORT
    return phase, replace(clock, t=max(t, 0.0) if abs(t) < TIME_EPS else t), completed


def support_foot(step_index: int, first_support: Side = Side.RIGHT) -> Side:
    """Support side of a step; sides alternate starting from ``first_support``."""
    if step_index < 0:
        raise ValueError("step_index must be non-negative")
    return first_support if step_index % 2 == 0 else first_support.other
