"""Next-step location and timing adjustment from the DCM predicted at touchdown."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from dcmwalk.core_model import vec


@dataclass(frozen=True)
class AdjusterGains:
    k_sa: float = 1.0
    k_f: float = 0.1
    compliance_margin: float = 0.02
    max_step: float = 0.95
    dt_sat: float = 0.2
    retarget_cutoff: float = 0.8  # fraction of single support after which the landing is frozen

    def __post_init__(self):
        if not self.k_sa > 0.0:
            raise ValueError("k_sa must be positive")
        if not 0.0 < self.k_f <= 1.0:
            raise ValueError("k_f must lie in (0, 1]")
        if self.compliance_margin < 0.0 or self.dt_sat < 0.0 or not self.max_step > 0.0:
            raise ValueError("margins must be non-negative and max_step positive")


@dataclass
class Adjustment:
    delta_p: np.ndarray = field(default_factory=lambda: vec())
    delta_t: float = 0.0
    T_ss_new: float = 0.0
    active: bool = False


def predict_dcm_at_landing(dcm, support, t: float, T_ss: float, omega: float) -> np.ndarray:
    """DCM at touchdown if the ZMP stays on the support foot for the rest of the step."""
    support = np.asarray(support, dtype=float)
    return support + (np.asarray(dcm, dtype=float) - support) * math.exp(omega * (T_ss - t))


def step_location_error(f_p, f_next, nominal_offset=None) -> np.ndarray:
    """``f_p - f_next``, optionally against the nominal touchdown DCM ``f_next + nominal_offset``."""
    err = np.asarray(f_p, dtype=float) - np.asarray(f_next, dtype=float)
    if nominal_offset is not None:
        err = err - np.asarray(nominal_offset, dtype=float)
    return err


def adjust_location(delta_f, gains: AdjusterGains) -> np.ndarray:
    """Proportional correction ``-k_sa * delta_f`` outside the compliance dead-band."""
    delta_f = np.asarray(delta_f, dtype=float)
    if np.linalg.norm(delta_f) <= gains.compliance_margin:
        return np.zeros_like(delta_f)
    return -gains.k_sa * delta_f


def landing_time(dcm: float, support: float, target: float, t: float, omega: float):
    """Time at which the DCM, diverging from ``support``, reaches ``target``; ``None`` if never."""
    gap = dcm - support
    if gap == 0.0:
        return None
    ratio = (target - support) / gap
    if ratio <= 0.0:
        return None
    return t + math.log(ratio) / omega


def adjust_time(dcm, support, target, t: float, T_ss: float, omega: float, gains: AdjusterGains,
                T_ss_current: float | None = None, axes=(0, 1)):
    """Step-time change that lands the DCM on ``target``, then the lag filter.

    Solved per axis in ``axes``; the earliest touchdown wins. When the DCM can
    no longer reach the target by waiting (it is past it, or on the wrong side
    of the support foot) the step is shortened by the full saturation.
    ``T_ss`` is the nominal duration; the filter blends from ``T_ss_current``
    (defaults to nominal). Returns ``(delta_t, T_ss_new)``.
    """
    dcm = np.atleast_1d(np.asarray(dcm, dtype=float))
    support = np.atleast_1d(np.asarray(support, dtype=float))
    target = np.atleast_1d(np.asarray(target, dtype=float))
    requests = []
    for ax in axes:
        if ax >= dcm.size:
            continue
        t_land = landing_time(float(dcm[ax]), float(support[ax]), float(target[ax]), t, omega)
        requests.append(-gains.dt_sat if t_land is None else t_land - T_ss)
    if not requests:
        delta_t = 0.0
    else:
        delta_t = min(max(min(requests), -gains.dt_sat), gains.dt_sat)
    current = T_ss if T_ss_current is None else T_ss_current
    T_ss_new = lag_filter(current, T_ss + delta_t, gains.k_f)
    return delta_t, T_ss_new


def lag_filter(current: float, requested: float, k_f: float) -> float:
    """First-order lag ``current (1 - k_f) + requested k_f``."""
    return current * (1.0 - k_f) + requested * k_f
