"""Flat JSON run configuration.

Every key is optional; omitted keys take the defaults below: a 30 kg robot
with 1 m COM height and 0.15 x 0.075 m feet, the six-step diagonal plan, the
noisy forward walk and the two push experiments.

Keys
----
seed, dt, gravity, com_vertical_accel
mass, com_height, foot_length, foot_width
lateral_offset, max_step, swing_height, first_support ("left" | "right"),
stop_duration, hold_duration
plan_*      diagonal planning demo (step_length [x, y], T_ss, T_ds, n_steps)
walk_*      noisy tracking demo (step_length, T_ss, T_ds, n_steps, noise_variance, strategy)
q_com, q_dcm, q_integral, r          LQR weights
kf_process_var, kf_meas_var          Kalman covariances (times identity)
integral_limit                       anti-windup clamp on the DCM-error integral [m s]
k_sa, k_f, compliance_margin, dt_sat, retarget_cutoff   step adjusters
fall_radius, com_fall_radius, settle_dcm_error          trial verdicts
s1_*        single-support stability grid
s2_*        push-recovery sweep
jobs        worker processes for grid/sweep fan-out
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dcmwalk.adjuster import AdjusterGains
from dcmwalk.core_model import natural_frequency
from dcmwalk.lqg import GainSet, synthesize_gains
from dcmwalk.planner import GaitParams
from dcmwalk.plant import RobotPhysicalParams
from dcmwalk.state_machine import Side

STRATEGIES = ("torque_only", "location", "location+time")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class RunConfig:
    seed: int = 0
    dt: float = 0.002
    gravity: float = 9.81
    com_vertical_accel: float = 0.0

    mass: float = 30.0
    com_height: float = 1.0
    foot_length: float = 0.15
    foot_width: float = 0.075

    lateral_offset: float = 0.1
    max_step: float = 0.95
    swing_height: float = 0.025
    first_support: str = "right"
    stop_duration: float = 0.2
    hold_duration: float = 1.0

    plan_step_length: list = field(default_factory=lambda: [0.5, 0.5])
    plan_T_ss: float = 0.8
    plan_T_ds: float = 0.2
    plan_n_steps: int = 6

    walk_step_length: list = field(default_factory=lambda: [0.5, 0.0])
    walk_T_ss: float = 1.0
    walk_T_ds: float = 0.0
    walk_n_steps: int = 6
    walk_noise_variance: float = 6.25e-4
    walk_strategy: str = "torque_only"

    q_com: float = 10.0
    q_dcm: float = 100.0
    q_integral: float = 1.0
    r: float = 1.0
    kf_process_var: float = 1e-6
    kf_meas_var: float = 6.25e-4
    integral_limit: float = 0.5

    k_sa: float = 1.0
    k_f: float = 0.1
    compliance_margin: float = 0.02
    dt_sat: float = 0.2
    retarget_cutoff: float = 0.8

    fall_radius: float = 1.2
    com_fall_radius: float = 2.0
    settle_dcm_error: float = 0.05

    s1_c_min: float = -0.2
    s1_c_max: float = 0.2
    s1_c_step: float = 0.02
    s1_cd_min: float = -1.0
    s1_cd_max: float = 1.0
    s1_cd_step: float = 0.1
    s1_time_limit: float = 2.0
    s1_settle_c: float = 0.01
    s1_settle_cd: float = 0.02

    s2_push_time: float = 2.2
    s2_push_duration: float = 0.01
    s2_push_direction: list = field(default_factory=lambda: [1.0, 0.0])
    s2_force_lo: float = 0.0
    s2_force_hi: float = 2500.0
    s2_tol: float = 1.0
    s2_n_steps: int = 8
    s2_T_ss: float = 0.8
    s2_T_ds: float = 0.2
    s2_noise_variance: float = 0.0
    s2_strategies: list = field(default_factory=lambda: list(STRATEGIES))

    jobs: int = 1

    # ---------------------------------------------------------------- I/O

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        problems = [f"{k}: unknown key" for k in sorted(set(data) - names)]
        cfg = cls(**{k: v for k, v in data.items() if k in names})
        try:
            cfg.validate()
        except ConfigError as exc:
            problems += exc.problems
        except TypeError as exc:
            problems.append(f"type error while validating: {exc}")
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"{path}: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError([f"{path}: top level must be a JSON object"])
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Hash of every setting that can change results (worker count excluded)."""
        d = self.to_dict()
        d.pop("jobs")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self) -> None:
        problems = []

        def positive(*names):
            for n in names:
                v = getattr(self, n)
                if isinstance(v, (int, float)) and not v > 0:
                    problems.append(f"{n}: must be positive (got {v!r})")

        def non_negative(*names):
            for n in names:
                v = getattr(self, n)
                if isinstance(v, (int, float)) and not v >= 0:
                    problems.append(f"{n}: must be non-negative (got {v!r})")

        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(f.default, float) and (isinstance(v, bool) or not isinstance(v, (int, float))):
                problems.append(f"{f.name}: must be a number (got {v!r})")
        typed = not problems

        positive("dt", "gravity", "mass", "com_height", "foot_length", "foot_width", "max_step",
                 "swing_height", "plan_T_ss", "walk_T_ss", "s2_T_ss", "r", "kf_meas_var", "k_sa",
                 "k_f", "fall_radius", "com_fall_radius", "settle_dcm_error", "s1_c_step", "s1_cd_step",
                 "s1_time_limit", "s1_settle_c", "s1_settle_cd", "s2_push_duration", "s2_tol")
        non_negative("lateral_offset", "stop_duration", "hold_duration", "plan_T_ds", "walk_T_ds",
                     "s2_T_ds", "walk_noise_variance", "s2_noise_variance", "q_com", "q_dcm", "q_integral",
                     "kf_process_var", "integral_limit", "compliance_margin", "dt_sat", "s2_force_lo")
        if typed and self.gravity + self.com_vertical_accel <= 0:
            problems.append("com_vertical_accel: g + vertical acceleration must be positive")
        if typed and self.k_f > 1:
            problems.append(f"k_f: must lie in (0, 1] (got {self.k_f!r})")
        if typed and not 0 < self.retarget_cutoff <= 1:
            problems.append(f"retarget_cutoff: must lie in (0, 1] (got {self.retarget_cutoff!r})")
        if self.first_support not in ("left", "right"):
            problems.append(f"first_support: must be 'left' or 'right' (got {self.first_support!r})")
        for n in ("plan_n_steps", "walk_n_steps", "s2_n_steps", "jobs"):
            v = getattr(self, n)
            if not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
                problems.append(f"{n}: must be an integer >= 1 (got {v!r})")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            problems.append(f"seed: must be an unsigned 64-bit integer (got {self.seed!r})")
        for n in ("plan_step_length", "walk_step_length", "s2_push_direction"):
            v = getattr(self, n)
            if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
                problems.append(f"{n}: must be a two-element list [x, y] (got {v!r})")
            elif typed and n != "s2_push_direction" and float(np.hypot(*v)) > self.max_step:
                problems.append(f"{n}: step length exceeds max_step")
        if isinstance(self.s2_push_direction, (list, tuple)) and len(self.s2_push_direction) == 2:
            if float(np.hypot(*self.s2_push_direction)) == 0:
                problems.append("s2_push_direction: must be non-zero")
        if self.walk_strategy not in STRATEGIES:
            problems.append(f"walk_strategy: must be one of {STRATEGIES} (got {self.walk_strategy!r})")
        if not isinstance(self.s2_strategies, (list, tuple)) or not self.s2_strategies or any(
            s not in STRATEGIES for s in self.s2_strategies
        ):
            problems.append(f"s2_strategies: must be a non-empty subset of {STRATEGIES}")
        if isinstance(self.s2_force_hi, (int, float)) and isinstance(self.s2_force_lo, (int, float)):
            if not self.s2_force_hi > self.s2_force_lo:
                problems.append("s2_force_hi: must exceed s2_force_lo")
        if typed and (self.s1_c_max < self.s1_c_min or self.s1_cd_max < self.s1_cd_min):
            problems.append("s1 ranges: max must not be below min")
        if problems:
            raise ConfigError(problems)

    # ------------------------------------------------------- derived parts

    @property
    def omega(self) -> float:
        return natural_frequency(self.com_height, self.com_vertical_accel, self.gravity)

    @property
    def robot(self) -> RobotPhysicalParams:
        return RobotPhysicalParams(self.mass, self.com_height, self.foot_length, self.foot_width)

    def gait(self, which: str) -> GaitParams:
        """Gait parameters for ``"plan"``, ``"walk"`` or ``"s2"``."""
        if which == "s2":
            sl, T_ss, T_ds = [0.0, 0.0], self.s2_T_ss, self.s2_T_ds
        else:
            sl = getattr(self, f"{which}_step_length")
            T_ss, T_ds = getattr(self, f"{which}_T_ss"), getattr(self, f"{which}_T_ds")
        return GaitParams(
            step_length=np.array(sl, dtype=float),
            T_ss=T_ss,
            T_ds=T_ds,
            swing_height=self.swing_height,
            com_height=self.com_height,
            max_step=self.max_step,
            lateral_offset=self.lateral_offset,
            first_support=Side(self.first_support),
            stop_duration=self.stop_duration,
            hold_duration=self.hold_duration,
        )

    def gains(self) -> GainSet:
        return synthesize_gains(
            self.omega,
            self.dt,
            (self.q_com, self.q_dcm, self.q_integral),
            self.r,
            self.kf_process_var,
            self.kf_meas_var,
            self.integral_limit,
        )

    def adjuster(self) -> AdjusterGains:
        return AdjusterGains(self.k_sa, self.k_f, self.compliance_margin, self.max_step, self.dt_sat,
                             self.retarget_cutoff)
