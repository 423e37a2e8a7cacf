"""Footprint, ZMP, swing-foot, COM and DCM reference planning for LIPM walking.

The ZMP reference is a chain of segments on which it is either constant
(single support, holds) or a linear ramp (initialization, double support,
stopping). On each segment the COM follows the closed-form boundary-value
solution of ``c_ddot = omega^2 (c - p)``. Boundary positions are chosen by
running the DCM backwards from a captured final state and the COM forwards from
its initial position, which makes the COM reference C1 across every boundary.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from dcmwalk.core_model import LipmState, dcm_of_state, propagate_com, vec
from dcmwalk.state_machine import TIME_EPS, Side, WalkPhase, initialize_duration


class PlanningError(ValueError):
    """Raised for infeasible gait parameters or degenerate planning requests."""


@dataclass
class GaitParams:
    step_length: np.ndarray = field(default_factory=lambda: vec(0.5, 0.5))
    T_ss: float = 0.8
    T_ds: float = 0.2
    swing_height: float = 0.025
    com_height: float = 1.0
    max_step: float = 0.95
    lateral_offset: float = 0.1
    first_support: Side = Side.RIGHT
    stop_duration: float = 0.2
    hold_duration: float = 1.0

    def __post_init__(self):
        self.step_length = np.asarray(self.step_length, dtype=float)
        self.first_support = Side(self.first_support)

    def validate(self) -> None:
        errors = []
        if not self.T_ss > 0.0:
            errors.append("T_ss must be positive")
        if self.T_ds < 0.0:
            errors.append("T_ds must be non-negative")
        if not self.swing_height > 0.0:
            errors.append("swing_height must be positive")
        if not self.com_height > 0.0:
            errors.append("com_height must be positive")
        if not self.max_step > 0.0:
            errors.append("max_step must be positive")
        if self.lateral_offset < 0.0:
            errors.append("lateral_offset must be non-negative")
        if self.stop_duration < 0.0 or self.hold_duration < 0.0:
            errors.append("stop/hold durations must be non-negative")
        if np.linalg.norm(self.step_length) > self.max_step + 1e-12:
            errors.append(f"|step_length| = {np.linalg.norm(self.step_length):.3f} exceeds max_step")
        if errors:
            raise PlanningError("; ".join(errors))

    @property
    def T_init(self) -> float:
        return initialize_duration(self.T_ds)


@dataclass(frozen=True)
class Footprint:
    position: np.ndarray
    index: int
    side: Side


@dataclass
class ReferenceFrame:
    zmp_ref: np.ndarray
    com_ref: np.ndarray
    com_vel_ref: np.ndarray
    dcm_ref: np.ndarray
    swing_pos: np.ndarray | None = None


# ---------------------------------------------------------------- footprints


def lateral_direction(side: Side) -> float:
    return 1.0 if side is Side.LEFT else -1.0


def home_footprints(params: GaitParams, origin=(0.0, 0.0)) -> dict:
    """Standing footprints, indexed -1 (first swing side) and 0 (first support)."""
    o = np.asarray(origin, dtype=float)
    first = params.first_support
    homes = {}
    for side, idx in ((first, 0), (first.other, -1)):
        homes[side] = Footprint(o + vec(0.0, lateral_direction(side) * params.lateral_offset), idx, side)
    return homes


def clamp_step(support: np.ndarray, nominal: np.ndarray, target: np.ndarray, max_step: float):
    """Pull ``target`` back towards ``nominal`` until it is within ``max_step`` of ``support``.

    Returns ``(position, clamped)``. The clamp moves along the adjustment
    direction ``target - nominal``; a nominal landing that is itself out of
    reach is scaled radially.
    """
    d0 = np.asarray(nominal, dtype=float) - support
    s = np.asarray(target, dtype=float) - nominal
    if np.linalg.norm(d0 + s) <= max_step:
        return np.asarray(target, dtype=float).copy(), False
    if np.linalg.norm(d0) >= max_step:
        return support + d0 * (max_step / np.linalg.norm(d0)), True
    a = float(s @ s)
    b = 2.0 * float(d0 @ s)
    c = float(d0 @ d0) - max_step * max_step
    lam = (-b + math.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return support + d0 + lam * s, True


def plan_footprints(
    n_steps: int,
    params: GaitParams,
    step_length=None,
    velocity=None,
    shift=None,
    origin=(0.0, 0.0),
) -> list[Footprint]:
    """Plan ``n_steps`` landing footprints.

    Each landing advances by the step length from the last print of the same
    side, starting from the home stance. The command is either an explicit
    ``step_length`` or a walking ``velocity`` (converted over one stride of two
    steps). ``shift`` displaces the upcoming (first) landing and is then
    clamped to ``max_step`` from the current support foot.
    """
    if n_steps < 1:
        raise PlanningError("n_steps must be at least 1")
    params.validate()
    if velocity is not None:
        sl = np.asarray(velocity, dtype=float) * 2.0 * (params.T_ss + params.T_ds)
    elif step_length is not None:
        sl = np.asarray(step_length, dtype=float)
    else:
        sl = params.step_length
    if np.linalg.norm(sl) > params.max_step + 1e-12:
        raise PlanningError("commanded step length exceeds max_step")

    homes = home_footprints(params, origin)
    last = {side: fp.position for side, fp in homes.items()}
    side = params.first_support.other
    prints = []
    for i in range(1, n_steps + 1):
        pos = last[side] + sl
        if i == 1 and shift is not None:
            support = last[side.other]
            pos, _ = clamp_step(support, pos, pos + np.asarray(shift, dtype=float), params.max_step)
        prints.append(Footprint(pos, i, side))
        last[side] = pos
        side = side.other
    return prints


def support_sequence(params: GaitParams, landings: Sequence[Footprint], origin=(0.0, 0.0)) -> list[np.ndarray]:
    """Support positions ``S_0..S_n``: the first support home followed by every landing."""
    homes = home_footprints(params, origin)
    return [homes[params.first_support].position] + [fp.position for fp in landings]


# ---------------------------------------------------------------------- ZMP


def plan_zmp(t: float, f_i, f_next, params: GaitParams) -> np.ndarray:
    """Step-local ZMP: on ``f_i`` in single support, then a ramp to ``f_next``."""
    f_i = np.asarray(f_i, dtype=float)
    if t < -TIME_EPS or t >= params.T_ss + params.T_ds + TIME_EPS:
        raise ValueError(f"t={t} outside the step [0, {params.T_ss + params.T_ds})")
    if t < params.T_ss:
        return f_i.copy()
    return f_i + (np.asarray(f_next, dtype=float) - f_i) * (t - params.T_ss) / params.T_ds


@dataclass
class Segment:
    """ZMP segment on ``[t0, t1]``: linear from ``p0`` to ``p1``."""

    t0: float
    t1: float
    p0: np.ndarray
    p1: np.ndarray
    phase: WalkPhase
    step: int

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    def zmp(self, t: float) -> np.ndarray:
        if self.t1 == self.t0:
            return self.p0.copy()
        return self.p0 + (self.p1 - self.p0) * ((t - self.t0) / (self.t1 - self.t0))


def build_schedule(
    t_begin: float,
    supports: Sequence[np.ndarray],
    ss_durations: Sequence[float],
    T_ds: float,
    final_zmp: np.ndarray,
    stop_duration: float,
    hold_duration: float,
    first_step: int = 0,
    init_from: np.ndarray | None = None,
    init_duration: float = 0.0,
) -> list[Segment]:
    """Chain ZMP segments for steps ``first_step..`` over ``supports``.

    ``supports[j]`` is the support of step ``first_step + j``; the last entry is
    the final landing. ``init_from`` prepends the initialization ramp.
    """
    if len(ss_durations) != len(supports) - 1:
        raise PlanningError("need one single-support duration per step")
    segs: list[Segment] = []
    t = t_begin

    def push(duration, p0, p1, phase, step):
        nonlocal t
        if duration > 0.0:
            segs.append(Segment(t, t + duration, np.asarray(p0, float), np.asarray(p1, float), phase, step))
            t += duration

    if init_from is not None:
        push(init_duration, init_from, supports[0], WalkPhase.INITIALIZE, first_step - 1)
    for j, T_ss in enumerate(ss_durations):
        k = first_step + j
        push(T_ss, supports[j], supports[j], WalkPhase.SINGLE_SUPPORT, k)
        push(T_ds, supports[j], supports[j + 1], WalkPhase.DOUBLE_SUPPORT, k)
    k_end = first_step + len(ss_durations)
    push(stop_duration, supports[-1], final_zmp, WalkPhase.IDLE, k_end)
    push(hold_duration, final_zmp, final_zmp, WalkPhase.IDLE, k_end)
    if not segs:
        raise PlanningError("empty ZMP schedule")
    return segs


def truncate_schedule(segs: Sequence[Segment], t: float) -> list[Segment]:
    """Drop everything before ``t``, splitting the segment that contains it."""
    out = []
    for s in segs:
        if s.t1 <= t + TIME_EPS:
            continue
        if s.t0 < t:
            out.append(Segment(t, s.t1, s.zmp(t), s.p1.copy(), s.phase, s.step))
        else:
            out.append(s)
    return out


# ---------------------------------------------------------------------- COM


def plan_com(t, p, c_0, c_f, t_0, t_f, omega, p_f=None):
    """Closed-form COM between boundary positions ``c_0`` at ``t_0`` and ``c_f`` at ``t_f``.

    ``p`` is the ZMP held over the interval; with ``p_f`` the ZMP instead ramps
    linearly from ``p`` to ``p_f``, for which ``p(t)`` is itself a particular
    solution and the same hyperbolic correction applies. Returns
    ``(position, velocity)``.
    """
    if t_f == t_0:
        raise PlanningError("degenerate COM interval (t_f == t_0)")
    p = np.asarray(p, dtype=float)
    p_end = p if p_f is None else np.asarray(p_f, dtype=float)
    rate = (p_end - p) / (t_f - t_0)
    p_t = p + rate * (t - t_0)
    denom = math.sinh((t_0 - t_f) * omega)
    a = (p_end - np.asarray(c_f, dtype=float)) / denom
    b = (np.asarray(c_0, dtype=float) - p) / denom
    u0, uf = (t - t_0) * omega, (t - t_f) * omega
    pos = p_t + a * math.sinh(u0) + b * math.sinh(uf)
    vel = rate + omega * (a * math.cosh(u0) + b * math.cosh(uf))
    return pos, vel


def plan_dcm(com, com_vel, omega):
    return np.asarray(com, dtype=float) + np.asarray(com_vel, dtype=float) / omega


class GaitPlan:
    """COM/DCM/ZMP reference over a ZMP schedule, starting from a COM position.

    After the last segment the ZMP is held and the state decays onto it.
    """

    def __init__(self, segments: Sequence[Segment], omega: float, com_start):
        if not segments:
            raise PlanningError("a plan needs at least one segment")
        self.segments = list(segments)
        self.omega = omega
        self._t0 = [s.t0 for s in self.segments]
        n = len(self.segments)
        w = omega

        dcm_b = [None] * (n + 1)
        dcm_b[n] = self.segments[-1].p1.copy()
        for j in range(n - 1, -1, -1):
            s = self.segments[j]
            v = (s.p1 - s.p0) / s.duration
            dcm_b[j] = s.p0 + v / w + (dcm_b[j + 1] - s.p1 - v / w) * math.exp(-w * s.duration)

        com_b = [None] * (n + 1)
        com_b[0] = np.asarray(com_start, dtype=float).copy()
        for j, s in enumerate(self.segments):
            v = (s.p1 - s.p0) / s.duration
            e = math.exp(-w * s.duration)
            d = dcm_b[j + 1] - s.p1 - v / w
            c_hom = com_b[j] - s.p0 - 0.5 * d * e
            com_b[j + 1] = s.p1 + 0.5 * d + c_hom * e
        self.dcm_boundaries = dcm_b
        self.com_boundaries = com_b
        # per-segment coefficients of plan_com, as floats for cheap evaluation
        self._coef = []
        for j, s in enumerate(self.segments):
            denom = math.sinh(-w * s.duration)
            rate = (s.p1 - s.p0) / s.duration
            a = (s.p1 - com_b[j + 1]) / denom
            b = (com_b[j] - s.p0) / denom
            self._coef.append((s.t0, s.t1, *map(float, (s.p0[0], s.p0[1], rate[0], rate[1], a[0], a[1], b[0], b[1]))))

    @property
    def t_start(self) -> float:
        return self.segments[0].t0

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1

    def segment_index(self, t: float) -> int:
        j = bisect.bisect_right(self._t0, t + TIME_EPS) - 1
        return min(max(j, 0), len(self.segments) - 1)

    def zmp(self, t: float) -> np.ndarray:
        if t >= self.t_end:
            return self.segments[-1].p1.copy()
        return self.segments[self.segment_index(t)].zmp(t)

    def com(self, t: float):
        """COM position and velocity at ``t``."""
        if t >= self.t_end:
            p = self.segments[-1].p1
            s = propagate_com(LipmState(self.com_boundaries[-1], np.zeros(2)), p, t - self.t_end, self.omega)
            return s.com, s.com_vel
        t0, t1, px, py, rx, ry, ax, ay, bx, by = self._coef[self.segment_index(t)]
        w = self.omega
        u0, u1 = w * (t - t0), w * (t - t1)
        s0, s1, k0, k1 = math.sinh(u0), math.sinh(u1), w * math.cosh(u0), w * math.cosh(u1)
        h = t - t0
        pos = np.array([px + rx * h + ax * s0 + bx * s1, py + ry * h + ay * s0 + by * s1])
        vel = np.array([rx + ax * k0 + bx * k1, ry + ay * k0 + by * k1])
        return pos, vel

    def dcm(self, t: float) -> np.ndarray:
        c, cd = self.com(t)
        return plan_dcm(c, cd, self.omega)

    def sampled_zmp(self, t: float, dt: float) -> np.ndarray:
        """ZMP held constant over ``[t, t + dt]`` that carries the reference DCM exactly to ``t + dt``.

        Equals :meth:`zmp` on constant segments; on ramps and across jumps it is
        the zero-order-hold equivalent a sampled controller can realize.
        """
        return self._held_zmp(self.dcm(t), t, dt)

    def _held_zmp(self, dcm_now, t, dt):
        e = math.exp(self.omega * dt)
        return (self.dcm(t + dt) - e * dcm_now) / (1.0 - e)

    def reference(self, t: float, dt: float | None = None) -> ReferenceFrame:
        """Reference at ``t``; with ``dt`` the ZMP is the sampled (held) equivalent."""
        c, cd = self.com(t)
        dcm = plan_dcm(c, cd, self.omega)
        zmp = self.zmp(t) if dt is None else self._held_zmp(dcm, t, dt)
        return ReferenceFrame(zmp, c, cd, dcm)

    def state(self, t: float) -> LipmState:
        c, cd = self.com(t)
        return LipmState(c, cd)

    def phase_at(self, t: float) -> WalkPhase:
        if t >= self.t_end:
            return WalkPhase.IDLE
        return self.segments[self.segment_index(t)].phase


def com_step_boundaries(plan: GaitPlan, step_index: int):
    """``(c_0, c_f, t_0, t_f)`` of a step: single-support start to the next step's start."""
    idx = [j for j, s in enumerate(plan.segments) if s.step == step_index and s.phase is not WalkPhase.INITIALIZE]
    if not idx:
        raise PlanningError(f"step {step_index} is not in the plan")
    j0, j1 = idx[0], idx[-1] + 1
    return plan.com_boundaries[j0], plan.com_boundaries[j1], plan.segments[j0].t0, plan.segments[idx[-1]].t1


# -------------------------------------------------------------------- swing


def _casteljau(ctrl, s: float):
    """Scalar Bezier value and d/ds by de Casteljau's algorithm."""
    pts = list(ctrl)
    n = len(pts) - 1
    u = 1.0 - s
    for depth in range(n, 1, -1):
        pts = [u * pts[i] + s * pts[i + 1] for i in range(depth)]
    if n == 0:
        return pts[0], 0.0
    return u * pts[0] + s * pts[1], n * (pts[1] - pts[0])


def _bezier(ctrl: np.ndarray, s: float):
    """Position and d/ds of a Bezier curve with control points along axis 0."""
    ctrl = np.asarray(ctrl, dtype=float)
    flat = ctrl.reshape(len(ctrl), -1)
    pairs = [_casteljau(flat[:, j].tolist(), s) for j in range(flat.shape[1])]
    shape = ctrl.shape[1:]
    return (np.array([p for p, _ in pairs]).reshape(shape), np.array([d for _, d in pairs]).reshape(shape))


class SwingTrajectory:
    """Swing foot path: cubic Bezier per horizontal axis and a quartic arc in height.

    The nominal arc has zero velocity at lift-off and touchdown and peaks at
    ``height`` at mid-swing. :meth:`retarget` re-plans the remainder from the
    current position and velocity, so the path stays C1.
    """

    def __init__(self, lift_from, land_at, t0: float, duration: float, height: float):
        if not duration > 0.0:
            raise PlanningError("swing duration must be positive")
        p0 = np.asarray(lift_from, dtype=float)
        p3 = np.asarray(land_at, dtype=float)
        self.height = height
        self.t_a = t0
        self.t_b = t0 + duration
        self.target = p3.copy()
        self.xy_ctrl = np.array([p0, p0, p3, p3])
        # 6 s^2 (1-s)^2 * (8/3) h peaks at h for s = 1/2
        self.z_ctrl = np.array([0.0, 0.0, 8.0 * height / 3.0, 0.0, 0.0])

    def _s(self, t: float) -> float:
        return min(max((t - self.t_a) / (self.t_b - self.t_a), 0.0), 1.0)

    def _eval(self, s: float):
        x, dx = _casteljau(self.xy_ctrl[:, 0].tolist(), s)
        y, dy = _casteljau(self.xy_ctrl[:, 1].tolist(), s)
        z, dz = _casteljau(self.z_ctrl.tolist(), s)
        return (x, y, z), (dx, dy, dz)

    def position(self, t: float) -> np.ndarray:
        return np.array(self._eval(self._s(t))[0])

    def velocity(self, t: float) -> np.ndarray:
        if t <= self.t_a or t >= self.t_b:
            return np.zeros(3)
        _, d = self._eval(self._s(t))
        return np.array(d) / (self.t_b - self.t_a)

    def retarget(self, t: float, land_at, t_land: float) -> None:
        """Re-plan from the state at ``t`` to touch down at ``land_at`` at ``t_land``."""
        land_at = np.asarray(land_at, dtype=float)
        if np.array_equal(land_at, self.target) and t_land == self.t_b:
            return
        pos, vel = self.position(t), self.velocity(t)
        tau = t_land - t
        if tau <= 0.0:
            self.t_a, self.t_b = t, t + 1e-9
            self.xy_ctrl = np.array([land_at] * 4)
            self.z_ctrl = np.zeros(4)
            self.target = land_at.copy()
            return
        self.t_a, self.t_b = t, t_land
        self.xy_ctrl = np.array([pos[:2], pos[:2] + vel[:2] * tau / 3.0, land_at, land_at])
        self.z_ctrl = np.array([pos[2], pos[2] + vel[2] * tau / 3.0, 0.0, 0.0])
        self.target = land_at.copy()


def plan_swing(t: float, lift_from, land_at, params: GaitParams) -> np.ndarray:
    """Swing foot position ``t`` seconds into single support."""
    return SwingTrajectory(lift_from, land_at, 0.0, params.T_ss, params.swing_height).position(t)


# ------------------------------------------------------------ whole-walk plan


@dataclass
class WalkPlan:
    """A nominal walk: footprints, timing and the resulting reference."""

    params: GaitParams
    landings: list
    supports: list
    swing_from: list
    plan: GaitPlan
    step_starts: list
    omega: float

    def swing_at(self, t: float):
        """Swing foot position, or ``None`` outside single support."""
        for k, t_k in enumerate(self.step_starts):
            if t_k - TIME_EPS <= t < t_k + self.params.T_ss - TIME_EPS:
                traj = SwingTrajectory(self.swing_from[k], self.supports[k + 1], t_k, self.params.T_ss,
                                       self.params.swing_height)
                return traj.position(t)
        return None


def plan_walk(
    n_steps: int,
    params: GaitParams,
    omega: float,
    step_length=None,
    origin=(0.0, 0.0),
    t_begin: float = 0.0,
) -> WalkPlan:
    """Plan a complete walk from a two-foot stance with the COM between the feet."""
    landings = plan_footprints(n_steps, params, step_length=step_length, origin=origin)
    homes = home_footprints(params, origin)
    supports = support_sequence(params, landings, origin)
    start_mid = 0.5 * (homes[Side.LEFT].position + homes[Side.RIGHT].position)
    final = 0.5 * (supports[-1] + supports[-2])
    segs = build_schedule(
        t_begin,
        supports,
        [params.T_ss] * n_steps,
        params.T_ds,
        final,
        params.stop_duration,
        params.hold_duration,
        init_from=start_mid,
        init_duration=params.T_init,
    )
    plan = GaitPlan(segs, omega, start_mid)
    # swing foot of step k lifts from the previous print of the landing side
    swing_from = [homes[params.first_support.other].position] + supports[:-2]
    T = params.T_ss + params.T_ds
    step_starts = [t_begin + params.T_init + k * T for k in range(n_steps)]
    return WalkPlan(params, landings, supports, swing_from, plan, step_starts, omega)
