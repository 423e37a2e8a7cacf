"""LIPM / DCM mathematics shared by the planner, controller, adjusters and plant.

Planar quantities are plain ``numpy`` arrays of shape ``(2,)`` ordered ``(x, y)``.
Every function here is written elementwise, so the sagittal and frontal axes can
be handled together or a single axis can be passed as a float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

GRAVITY = 9.81

ArrayLike = Union[float, np.ndarray]


def vec(x: float = 0.0, y: float = 0.0) -> np.ndarray:
    """Build a planar vector."""
    return np.array([x, y], dtype=float)


def natural_frequency(com_height: float, com_vertical_accel: float = 0.0, gravity: float = GRAVITY) -> float:
    """Pendulum natural frequency ``sqrt((g + z_c_ddot) / z_c)``."""
    if not com_height > 0.0:
        raise ValueError(f"COM height must be positive, got {com_height}")
    num = gravity + com_vertical_accel
    if not num > 0.0:
        raise ValueError(f"g + vertical COM acceleration must be positive, got {num}")
    return math.sqrt(num / com_height)


@dataclass(frozen=True)
class PendulumParams:
    com_height: float = 1.0
    com_vertical_accel: float = 0.0
    gravity: float = GRAVITY
    omega: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "omega", natural_frequency(self.com_height, self.com_vertical_accel, self.gravity)
        )


@dataclass
class LipmState:
    """COM position and velocity."""

    com: np.ndarray
    com_vel: np.ndarray

    def __post_init__(self):
        self.com = np.asarray(self.com, dtype=float)
        self.com_vel = np.asarray(self.com_vel, dtype=float)
        # a sum is non-finite iff some term is
        if not math.isfinite(float(self.com.sum() + self.com_vel.sum())):
            raise ValueError("LIPM state must be finite")

    def dcm(self, omega: float) -> np.ndarray:
        return dcm_of_state(self, omega)

    def copy(self) -> "LipmState":
        return LipmState(self.com.copy(), self.com_vel.copy())


def com_acceleration(c: ArrayLike, p: ArrayLike, omega: float) -> ArrayLike:
    """LIPM acceleration ``omega^2 (c - p)``."""
    return omega * omega * (np.asarray(c, dtype=float) - np.asarray(p, dtype=float))


def dcm_of_state(s: LipmState, omega: float) -> np.ndarray:
    return s.com + s.com_vel / omega


def propagate_dcm(dcm: ArrayLike, p: ArrayLike, dt: float, omega: float) -> ArrayLike:
    """Exact DCM propagation under a constant ZMP: ``p + (dcm - p) e^{omega dt}``."""
    p = np.asarray(p, dtype=float)
    return p + (np.asarray(dcm, dtype=float) - p) * math.exp(omega * dt)


def propagate_com(
    s: LipmState,
    dcm: ArrayLike,
    dt: float,
    omega: float,
    zmp: ArrayLike | None = None,
) -> LipmState:
    """Integrate ``c_dot = -omega (c - dcm)`` exactly over ``dt``.

    Without ``zmp`` the DCM is held constant. With ``zmp`` the DCM follows the
    exponential ``zmp + (dcm - zmp) e^{omega t}`` starting from ``dcm``, which is
    the DCM path of a LIPM under that ZMP.
    """
    c0 = s.com
    dcm = np.asarray(dcm, dtype=float)
    e_neg = math.exp(-omega * dt)
    if zmp is None:
        c = dcm + (c0 - dcm) * e_neg
        return LipmState(c, omega * (dcm - c))
    p = np.asarray(zmp, dtype=float)
    d0 = dcm - p
    e_pos = math.exp(omega * dt)
    c = p + 0.5 * d0 * e_pos + (c0 - p - 0.5 * d0) * e_neg
    return LipmState(c, omega * (p + d0 * e_pos - c))
