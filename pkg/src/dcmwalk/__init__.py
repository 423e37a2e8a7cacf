"""DCM-based walking: LIPM planners, LQG tracking, step adjusters and a simulated plant."""

from dcmwalk.core_model import (
    LipmState,
    PendulumParams,
    com_acceleration,
    dcm_of_state,
    natural_frequency,
    propagate_com,
    propagate_dcm,
    vec,
)
from dcmwalk.kernels import BACKEND

__all__ = [
    "BACKEND",
    "LipmState",
    "PendulumParams",
    "com_acceleration",
    "dcm_of_state",
    "natural_frequency",
    "propagate_com",
    "propagate_dcm",
    "vec",
]

__version__ = "0.1.0"
