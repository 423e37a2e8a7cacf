"""Closed-loop walking trial: state machine -> planner -> adjusters -> LQG -> plant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from dcmwalk.adjuster import (
    AdjusterGains,
    adjust_location,
    adjust_time,
    predict_dcm_at_landing,
    step_location_error,
)
from dcmwalk.core_model import LipmState, dcm_of_state
from dcmwalk.lqg import GainSet, LQGController
from dcmwalk.planner import (
    GaitParams,
    GaitPlan,
    SwingTrajectory,
    build_schedule,
    clamp_step,
    plan_walk,
    truncate_schedule,
)
from dcmwalk.plant import NoiseModel, PushEvent, RobotPhysicalParams, SupportPolygon, is_fallen, step_dynamics
from dcmwalk.state_machine import TIME_EPS, PhaseClock, WalkPhase, tick

PHASE_CODES = {
    WalkPhase.IDLE: 0,
    WalkPhase.INITIALIZE: 1,
    WalkPhase.SINGLE_SUPPORT: 2,
    WalkPhase.DOUBLE_SUPPORT: 3,
}
PHASE_NAMES = {v: k.value for k, v in PHASE_CODES.items()}

LOG_COLUMNS = (
    "t", "phase", "step",
    "zmp_ref_x", "zmp_ref_y", "com_ref_x", "com_ref_y", "dcm_ref_x", "dcm_ref_y",
    "com_x", "com_y", "comd_x", "comd_y", "dcm_x", "dcm_y",
    "com_meas_x", "com_meas_y", "dcm_meas_x", "dcm_meas_y",
    "com_est_x", "com_est_y", "dcm_est_x", "dcm_est_y",
    "p_cmd_x", "p_cmd_y", "p_x", "p_y",
    "df_x", "df_y", "dp_x", "dp_y", "dt_adj", "T_ss", "step_disp", "clamped",
    "land_x", "land_y", "swing_x", "swing_y", "swing_z", "push_x", "push_y",
)
COL = {name: i for i, name in enumerate(LOG_COLUMNS)}

STRATEGY_FLAGS = {
    "torque_only": (False, False),
    "location": (True, False),
    "location+time": (True, True),
}


@dataclass
class TrialConfig:
    gait: GaitParams
    n_steps: int
    gains: GainSet
    robot: RobotPhysicalParams = field(default_factory=RobotPhysicalParams)
    adjuster: AdjusterGains = field(default_factory=AdjusterGains)
    strategy: str = "torque_only"
    noise: NoiseModel = field(default_factory=NoiseModel)
    fall_radius: float = 1.2
    com_fall_radius: float = 2.0
    settle_dcm_error: float = 0.05
    tail: float = 1.0
    time_limit: float | None = None

    @property
    def omega(self) -> float:
        return self.gains.omega

    @property
    def dt(self) -> float:
        return self.gains.dt


@dataclass
class AdjustmentEvent:
    t: float
    step: int
    delta_f: np.ndarray
    delta_p: np.ndarray
    delta_t: float
    landing: np.ndarray
    clamped: bool
    kind: str  # "start" on first activation in a step, "commit" at touchdown


@dataclass
class TrialResult:
    verdict: str
    log: np.ndarray
    events: list
    fall_time: float | None
    peak_dcm_error: float
    rms_dcm_error: float
    final_dcm_error: float
    max_step_disp: float
    max_abs_dt: float
    footprints: list

    @property
    def recovered(self) -> bool:
        return self.verdict == "recovered"

    def column(self, name: str) -> np.ndarray:
        return self.log[:, COL[name]]


def _quantize(T: float, dt: float) -> float:
    return round(T / dt) * dt


class Walker:
    """One simulated robot walking a planned footstep sequence."""

    def __init__(self, cfg: TrialConfig, pushes=(), initial_state: LipmState | None = None, step_length=None):
        self.cfg = cfg
        self.pushes = tuple(pushes)
        gait = cfg.gait
        self.walk = plan_walk(cfg.n_steps, gait, cfg.omega, step_length=step_length)
        self.plan: GaitPlan = self.walk.plan
        self.supports = [s.copy() for s in self.walk.supports]
        self.swing_from = [s.copy() for s in self.walk.swing_from]
        self.homes = (self.walk.swing_from[0].copy(), self.walk.supports[0].copy())
        self.use_location, self.use_time = STRATEGY_FLAGS[cfg.strategy]

        self.state = self.plan.state(0.0) if initial_state is None else initial_state.copy()
        self.ctrl = LQGController(cfg.gains)
        self.noise = None

        self.phase = WalkPhase.IDLE
        self.clock = PhaseClock(0.0, gait.T_ss, gait.T_ds, gait.T_init)
        self.step = 0
        self.step_start = gait.T_init
        self.T_filtered = gait.T_ss
        self.pending = None
        self.nominal_land_dcm = None
        self.adjust_started = False
        self.swing = None
        self.last_swing = np.array([*self.homes[0], 0.0])
        self.events: list[AdjustmentEvent] = []
        self.df = np.zeros(2)
        self.dp = np.zeros(2)
        self.dt_adj = 0.0
        self.clamped = False

    # ------------------------------------------------------------ helpers

    def measure(self, k: int):
        s = self.state
        if self.noise is None:
            return s.com.copy(), dcm_of_state(s, self.cfg.omega)
        e = self.noise[k]
        c = s.com + e[:2]
        return c, c + (s.com_vel + e[2:]) / self.cfg.omega

    def polygon(self) -> SupportPolygon:
        robot = self.cfg.robot
        S = self.supports
        if self.phase is WalkPhase.SINGLE_SUPPORT:
            return SupportPolygon.single(S[self.step], robot)
        if self.phase is WalkPhase.DOUBLE_SUPPORT:
            nxt = self.pending if self.pending is not None else S[self.step + 1]
            return SupportPolygon.double(S[self.step], nxt, robot)
        if self.phase is WalkPhase.IDLE and self.step >= self.cfg.n_steps:
            return SupportPolygon.double(S[-1], S[-2], robot)
        return SupportPolygon.double(*self.homes, robot)

    def _estimate_preview(self, c_meas, z_meas):
        """Filtered DCM for this cycle, the same correction the controller applies."""
        z = np.empty(2)
        for ax, a in enumerate(self.ctrl.axes):
            rc = float(c_meas[ax]) - a.c_prior
            rz = float(z_meas[ax]) - a.z_prior
            z[ax] = a.z_prior + a.l10 * rc + a.l11 * rz
        return z

    def _begin_step(self, t: float) -> None:
        g = self.cfg.gait
        self.step_start = t
        self.T_filtered = g.T_ss
        self.pending = None
        self.adjust_started = False
        self.clamped = False
        self.nominal_land_dcm = self.plan.dcm(t + g.T_ss)
        k = self.step
        self.swing = SwingTrajectory(self.swing_from[k], self.supports[k + 1], t, g.T_ss, g.swing_height)

    def _replan(self, t: float, landing: np.ndarray, T_ss_eff: float) -> None:
        g = self.cfg.gait
        k = self.step
        shift = landing - self.supports[k + 1]
        supports = [self.supports[k]] + [s + shift for s in self.supports[k + 1:]]
        final = 0.5 * (supports[-1] + supports[-2])
        ss = [T_ss_eff] + [g.T_ss] * (len(supports) - 2)
        segs = build_schedule(self.step_start, supports, ss, g.T_ds, final, g.stop_duration,
                              g.hold_duration, first_step=k)
        segs = truncate_schedule(segs, t)
        c_now = self.plan.com(t)[0]
        self.plan = GaitPlan(segs, self.cfg.omega, c_now)
        if self.swing is not None:
            self.swing.retarget(t, landing, self.step_start + T_ss_eff)

    def _commit_step(self, t: float) -> None:
        k = self.step
        if self.pending is not None:
            shift = self.pending - self.supports[k + 1]
            for j in range(k + 1, len(self.supports)):
                self.supports[j] = self.supports[j] + shift
            # later swings lift from the shifted prints
            for j in range(k + 2, len(self.swing_from)):
                self.swing_from[j] = self.supports[j - 1].copy()
            self.events.append(AdjustmentEvent(t, k, self.df.copy(), self.dp.copy(), self.dt_adj,
                                               self.supports[k + 1].copy(), False, "commit"))
        self.pending = None

    def _adjust(self, t: float, z_est: np.ndarray):
        cfg = self.cfg
        g = cfg.gait
        gains = cfg.adjuster
        k = self.step
        t_loc = t - self.step_start
        f_i = self.supports[k]
        f_nom = self.supports[k + 1]
        offset = self.nominal_land_dcm - f_nom
        T_cur = self.clock.T_ss
        if t_loc >= T_cur - TIME_EPS:
            return
        f_p = predict_dcm_at_landing(z_est, f_i, t_loc, T_cur, cfg.omega)
        df = step_location_error(f_p, f_nom, offset)
        active = float(np.linalg.norm(df)) > gains.compliance_margin
        self.df = df

        landing = self.pending if self.pending is not None else f_nom
        clamped = False
        if self.use_location and t_loc < gains.retarget_cutoff * T_cur:
            self.dp = adjust_location(df, gains)
            landing, clamped = clamp_step(f_i, f_nom, f_nom - self.dp, gains.max_step)
            self.clamped = clamped

        T_new = T_cur
        if self.use_time:
            if active:
                axes = [ax for ax in (0, 1) if abs(df[ax]) > gains.compliance_margin]
                if not axes:
                    axes = [int(np.argmax(np.abs(df)))]
                self.dt_adj, self.T_filtered = adjust_time(
                    z_est, f_i, f_nom + offset, t_loc, g.T_ss, cfg.omega, gains,
                    T_ss_current=self.T_filtered, axes=axes,
                )
            else:
                self.dt_adj = 0.0
                self.T_filtered = self.T_filtered * (1.0 - gains.k_f) + g.T_ss * gains.k_f
            T_new = max(_quantize(self.T_filtered, cfg.dt), _quantize(t_loc, cfg.dt) + cfg.dt)

        if active and not self.adjust_started:
            self.adjust_started = True
            self.events.append(AdjustmentEvent(t, k, df.copy(), self.dp.copy(), self.dt_adj, landing.copy(),
                                               clamped, "start"))
        moved = self.pending is None and not np.array_equal(landing, f_nom)
        moved = moved or (self.pending is not None and not np.array_equal(landing, self.pending))
        if moved or T_new != T_cur:
            self.pending = None if np.array_equal(landing, f_nom) else landing.copy()
            self.clock = replace(self.clock, T_ss=T_new)
            self._replan(t, landing, T_new)

    # --------------------------------------------------------------- run

    def run(self) -> TrialResult:
        cfg = self.cfg
        g = cfg.gait
        dt = cfg.dt
        w = cfg.omega
        nominal_end = self.plan.t_end
        horizon = nominal_end + cfg.tail
        if cfg.time_limit is not None:
            horizon = min(horizon, cfg.time_limit)
        n_cycles = int(math.ceil(horizon / dt - 1e-9))
        log = np.full((n_cycles, len(LOG_COLUMNS)), np.nan)
        if cfg.noise.measurement_variance > 0.0:
            rng = np.random.default_rng(cfg.noise.rng_seed)
            self.noise = rng.normal(0.0, cfg.noise.std, size=(n_cycles, 4))
        c_meas, z_meas = self.measure(0)
        self.ctrl.reset(c_meas, z_meas)
        fall_time = None
        verdict = "recovered"
        # the start command only arms the machine; initialization begins at t = 0
        self.phase, self.clock, _ = tick(self.phase, self.clock, dt, "start")
        rows = 0

        for k in range(n_cycles):
            t = k * dt
            if k > 0:
                c_meas, z_meas = self.measure(k)

            if self.phase is WalkPhase.SINGLE_SUPPORT and (self.use_location or self.use_time):
                self._adjust(t, self._estimate_preview(c_meas, z_meas))

            ref = self.plan.reference(t, dt)
            poly = self.polygon()
            p_cmd, p_app = self.ctrl.step(c_meas, z_meas, ref, poly.lower, poly.upper)
            c_est, z_est = self.ctrl.estimate

            row = log[k]
            row[COL["t"]] = t
            row[COL["phase"]] = PHASE_CODES[self.phase]
            row[COL["step"]] = self.step
            row[3:5] = ref.zmp_ref
            row[5:7] = ref.com_ref
            row[7:9] = ref.dcm_ref
            row[9:11] = self.state.com
            row[11:13] = self.state.com_vel
            row[13:15] = dcm_of_state(self.state, w)
            row[15:17] = c_meas
            row[17:19] = z_meas
            row[19:21] = c_est
            row[21:23] = z_est
            row[23:25] = p_cmd
            row[25:27] = p_app
            if self.phase is WalkPhase.SINGLE_SUPPORT:
                landing = self.pending if self.pending is not None else self.supports[self.step + 1]
                row[27:29] = self.df
                row[29:31] = self.dp
                row[COL["dt_adj"]] = self.dt_adj
                row[COL["T_ss"]] = self.clock.T_ss
                row[COL["step_disp"]] = float(np.linalg.norm(landing - self.supports[self.step]))
                row[COL["clamped"]] = float(self.clamped)
                row[COL["land_x"]:COL["land_y"] + 1] = landing
                self.last_swing = self.swing.position(t)
            row[COL["swing_x"]:COL["swing_z"] + 1] = self.last_swing
            push = np.zeros(2)
            for ev in self.pushes:
                if ev.start_time <= t < ev.end_time:
                    push = push + ev.force
            row[COL["push_x"]:] = push
            rows = k + 1

            try:
                self.state = step_dynamics(self.state, p_app, t, dt, w, cfg.robot.mass, self.pushes)
            except ValueError:
                verdict, fall_time = "fallen", t + dt
                break

            cmd = None
            if self.phase in (WalkPhase.SINGLE_SUPPORT, WalkPhase.DOUBLE_SUPPORT) and self.step == cfg.n_steps - 1:
                cmd = "stop"
            prev_phase = self.phase
            self.phase, self.clock, completed = tick(self.phase, self.clock, dt, cmd)
            t_next = (k + 1) * dt
            if prev_phase is WalkPhase.INITIALIZE and self.phase is WalkPhase.SINGLE_SUPPORT:
                self._begin_step(t_next - self.clock.t)
            elif completed:
                self._commit_step(t_next)
                self.step += 1
                self.clock = replace(self.clock, T_ss=g.T_ss)
                if self.phase is WalkPhase.SINGLE_SUPPORT:
                    self._begin_step(t_next - self.clock.t)
                else:
                    self.swing = None

            feet = self.supports[max(self.step - 1, 0): self.step + 2]
            if is_fallen(self.state, self.polygon(), w, feet, cfg.fall_radius, cfg.com_fall_radius):
                verdict, fall_time = "fallen", t_next
                break

        log = log[:rows]
        dcm_err = np.hypot(log[:, COL["dcm_x"]] - log[:, COL["dcm_ref_x"]],
                           log[:, COL["dcm_y"]] - log[:, COL["dcm_ref_y"]])
        final_err = float(dcm_err[-1]) if rows else math.inf
        if verdict == "recovered" and not final_err < cfg.settle_dcm_error:
            verdict = "fallen"
        disp = log[:, COL["step_disp"]]
        dts = log[:, COL["T_ss"]] - g.T_ss
        return TrialResult(
            verdict=verdict,
            log=log,
            events=self.events,
            fall_time=fall_time,
            peak_dcm_error=float(np.max(dcm_err)) if rows else math.inf,
            rms_dcm_error=float(np.sqrt(np.mean(dcm_err**2))) if rows else math.inf,
            final_dcm_error=final_err,
            max_step_disp=float(np.nanmax(disp)) if np.any(np.isfinite(disp)) else 0.0,
            max_abs_dt=float(np.nanmax(np.abs(dts))) if np.any(np.isfinite(dts)) else 0.0,
            footprints=[s.copy() for s in self.supports],
        )


def run_trial(cfg: TrialConfig, pushes=(), initial_state: LipmState | None = None, step_length=None) -> TrialResult:
    """Simulate one walk at ``cfg.dt`` until the plan ends (plus ``cfg.tail``) or the robot falls.

    The robot starts on the reference state unless ``initial_state`` is given.
    A run that never falls is still judged fallen if its final DCM tracking
    error exceeds ``cfg.settle_dcm_error``.
    """
    return Walker(cfg, pushes, initial_state, step_length).run()
