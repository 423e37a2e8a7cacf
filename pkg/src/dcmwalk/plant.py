"""Simulated LIPM robot: ZMP saturation to the support polygon, push forces, noisy sensing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dcmwalk.core_model import LipmState, dcm_of_state, vec
from dcmwalk.kernels import lipm_axis_step


@dataclass(frozen=True)
class RobotPhysicalParams:
    mass: float = 30.0
    com_height: float = 1.0
    foot_length: float = 0.15
    foot_width: float = 0.075

    def __post_init__(self):
        for name in ("mass", "com_height", "foot_length", "foot_width"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PushEvent:
    force: np.ndarray
    start_time: float
    duration: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        if not self.duration > 0.0:
            raise ValueError("push duration must be positive")

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class NoiseModel:
    measurement_variance: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.measurement_variance < 0.0:
            raise ValueError("measurement variance must be non-negative")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.measurement_variance))


@dataclass(frozen=True)
class SupportPolygon:
    """Axis-aligned rectangle admissible for the ZMP."""

    center: np.ndarray
    half_length: float
    half_width: float

    @property
    def lower(self) -> np.ndarray:
        return self.center - vec(self.half_length, self.half_width)

    @property
    def upper(self) -> np.ndarray:
        return self.center + vec(self.half_length, self.half_width)

    def contains(self, p, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    @classmethod
    def single(cls, foot, robot: RobotPhysicalParams) -> "SupportPolygon":
        return cls(np.asarray(foot, dtype=float), robot.foot_length / 2.0, robot.foot_width / 2.0)

    @classmethod
    def double(cls, foot_a, foot_b, robot: RobotPhysicalParams) -> "SupportPolygon":
        """Bounding rectangle of two axis-aligned feet."""
        half = vec(robot.foot_length / 2.0, robot.foot_width / 2.0)
        lo = np.minimum(foot_a, foot_b) - half
        hi = np.maximum(foot_a, foot_b) + half
        mid = 0.5 * (lo + hi)
        return cls(mid, 0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1]))


def saturate_zmp(p_cmd, polygon: SupportPolygon) -> np.ndarray:
    return np.clip(np.asarray(p_cmd, dtype=float), polygon.lower, polygon.upper)


def _push_windows(t: float, dt: float, pushes: Sequence[PushEvent]):
    """Split ``[t, t + dt]`` at push start/end times; yields ``(duration, force)``."""
    cuts = {t, t + dt}
    for ev in pushes:
        for edge in (ev.start_time, ev.end_time):
            if t < edge < t + dt:
                cuts.add(edge)
    times = sorted(cuts)
    for a, b in zip(times[:-1], times[1:]):
        mid = 0.5 * (a + b)
        force = np.zeros(2)
        for ev in pushes:
            if ev.start_time <= mid < ev.end_time:
                force = force + ev.force
        yield b - a, force


def step_dynamics(
    s: LipmState,
    p_applied,
    t: float,
    dt: float,
    omega: float,
    mass: float,
    pushes: Sequence[PushEvent] = (),
) -> LipmState:
    """Advance ``c_ddot = omega^2 (c - p) + F/m`` exactly over ``dt``.

    The ZMP is held over the step; active push forces are constant on each
    sub-interval between push edges, so every piece has a closed form.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    c = [float(s.com[0]), float(s.com[1])]
    cd = [float(s.com_vel[0]), float(s.com_vel[1])]
    p = np.asarray(p_applied, dtype=float)
    for h, force in _push_windows(t, dt, pushes):
        for ax in (0, 1):
            c[ax], cd[ax] = lipm_axis_step(c[ax], cd[ax], float(p[ax]), float(force[ax]) / mass, h, omega)
    return LipmState(np.array(c), np.array(cd))


@dataclass
class Sensor:
    """Adds i.i.d. Gaussian noise to COM position and velocity; DCM is derived from the noisy pair."""

    noise: NoiseModel
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.noise.rng_seed)

    def measure(self, s: LipmState, omega: float):
        return measure(s, self.noise, omega, self.rng)


def measure(s: LipmState, noise: NoiseModel, omega: float, rng: np.random.Generator | None = None):
    """Noisy ``(com, dcm)``. Without ``rng`` a generator is seeded from ``noise.rng_seed``."""
    if noise.measurement_variance == 0.0:
        return s.com.copy(), dcm_of_state(s, omega)
    if rng is None:
        rng = np.random.default_rng(noise.rng_seed)
    e = rng.normal(0.0, noise.std, size=4)
    c = s.com + e[:2]
    cd = s.com_vel + e[2:]
    return c, c + cd / omega


def is_fallen(
    s: LipmState,
    support: SupportPolygon,
    omega: float,
    footprints: Sequence[np.ndarray] = (),
    fall_radius: float = 1.2,
    com_radius: float = 2.0,
) -> bool:
    """DCM beyond ``fall_radius`` of the support centre, or COM beyond ``com_radius`` of every foot."""
    cx, cy = float(s.com[0]), float(s.com[1])
    vx, vy = float(s.com_vel[0]), float(s.com_vel[1])
    if not all(map(math.isfinite, (cx, cy, vx, vy))):
        return True
    ox, oy = float(support.center[0]), float(support.center[1])
    if math.hypot(cx + vx / omega - ox, cy + vy / omega - oy) > fall_radius:
        return True
    if math.hypot(cx - ox, cy - oy) <= com_radius:
        return False
    return all(math.hypot(cx - float(f[0]), cy - float(f[1])) > com_radius for f in footprints)
