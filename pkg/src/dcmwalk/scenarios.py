"""Experiment harness: single-foot stability grid, push-recovery sweeps and CSV output."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dcmwalk import kernels
from dcmwalk.core_model import LipmState, vec
from dcmwalk.lqg import GainSet, LQGController
from dcmwalk.planner import ReferenceFrame
from dcmwalk.plant import NoiseModel, PushEvent, SupportPolygon, step_dynamics
from dcmwalk.simulation import LOG_COLUMNS, PHASE_NAMES, TrialConfig, TrialResult, run_trial

STRATEGY_ORDER = ("torque_only", "location", "location+time")


def trial_seed(seed: int, index: int) -> int:
    """Independent per-trial stream derived from the run seed and the trial index."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


# ------------------------------------------------------------- Scenario 1


@dataclass(frozen=True)
class GridSpec:
    c_min: float = -0.2
    c_max: float = 0.2
    c_step: float = 0.02
    cd_min: float = -1.0
    cd_max: float = 1.0
    cd_step: float = 0.1
    time_limit: float = 2.0
    settle_c: float = 0.01
    settle_cd: float = 0.02
    fall_radius: float = 1.2

    def c_values(self) -> np.ndarray:
        return _axis(self.c_min, self.c_max, self.c_step)

    def cd_values(self) -> np.ndarray:
        return _axis(self.cd_min, self.cd_max, self.cd_step)


def _axis(lo, hi, step):
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps symmetric ranges exactly symmetric
    return np.round(lo + step * np.arange(n), 12)


@dataclass
class GridResult:
    spec: GridSpec
    c: np.ndarray
    cd: np.ndarray
    recovered: np.ndarray  # bool, shape (len(c), len(cd))
    settle_time: np.ndarray  # s, nan where not recovered
    oracle: np.ndarray
    omega: float
    p_max: float

    @property
    def n_cells(self) -> int:
        return self.recovered.size

    def coverage(self) -> float:
        n = int(self.oracle.sum())
        return float((self.recovered & self.oracle).sum()) / n if n else 1.0

    def contained(self) -> bool:
        return not bool(np.any(self.recovered & ~self.oracle))

    def symmetric(self) -> bool:
        return bool(np.array_equal(self.recovered, self.recovered[::-1, ::-1]))

    def stable_line_cells(self):
        """Per ``c`` row, the grid cell nearest ``cd = -omega c``, if inside the grid range."""
        out = []
        for i, c in enumerate(self.c):
            target = -self.omega * c
            if not self.cd[0] - 1e-12 <= target <= self.cd[-1] + 1e-12:
                continue
            out.append((i, int(np.argmin(np.abs(self.cd - target)))))
        return out


def capturability_oracle(state: LipmState, p_max: float, omega: float, center=None) -> bool:
    """0-step capturability of the clamped LIPM: ``|c + cd/omega - center| <= p_max`` on every axis."""
    com = np.atleast_1d(np.asarray(state.com, dtype=float))
    vel = np.atleast_1d(np.asarray(state.com_vel, dtype=float))
    ctr = np.zeros_like(com) if center is None else np.asarray(center, dtype=float)
    return bool(np.all(np.abs(com + vel / omega - ctr) <= p_max))


def _grid_rows(args):
    gains, spec, c_values, cd_values, p_max = args
    ctrl = gains.axis_controller()
    n_steps = int(round(spec.time_limit / gains.dt))
    out = []
    for c0 in c_values:
        row = []
        for cd0 in cd_values:
            settle, _, _, _ = kernels.simulate_regulation(
                ctrl, float(c0), float(cd0), gains.omega, gains.dt, n_steps,
                -p_max, p_max, spec.settle_c, spec.settle_cd, spec.fall_radius,
            )
            row.append(settle)
        out.append(row)
    return out


def run_stability_grid(gains: GainSet, spec: GridSpec = GridSpec(), p_max: float = 0.075, jobs: int = 1) -> GridResult:
    """Regulate every ``(c, cd)`` cell to the origin on one foot with the ZMP clamped to ``+-p_max``.

    A cell recovers when the state enters the settle ball within the time
    limit. Rows are fanned out over ``jobs`` processes and gathered by index.
    """
    c_vals = spec.c_values()
    cd_vals = spec.cd_values()
    if jobs > 1:
        chunks = np.array_split(np.arange(len(c_vals)), min(jobs, len(c_vals)))
        tasks = [(gains, spec, c_vals[idx], cd_vals, p_max) for idx in chunks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_grid_rows, tasks))
        settle = np.array([row for part in parts for row in part])
    else:
        settle = np.array(_grid_rows((gains, spec, c_vals, cd_vals, p_max)))
    recovered = settle >= 0
    settle_time = np.where(recovered, settle * gains.dt, np.nan)
    w = gains.omega
    oracle = np.abs(c_vals[:, None] + cd_vals[None, :] / w) <= p_max
    return GridResult(spec, c_vals, cd_vals, recovered, settle_time, oracle, w, p_max)


def run_stance_trial(gains: GainSet, c0: float, cd0: float, spec: GridSpec = GridSpec(), p_max: float = 0.075):
    """One Scenario-1 cell through the full controller and plant, sagittal axis only.

    Returns ``(recovered, log)``; ``log`` rows are ``t, c, cd, dcm, p_cmd, p``.
    """
    w, dt = gains.omega, gains.dt
    ctrl = LQGController(gains)
    state = LipmState(vec(c0, 0.0), vec(cd0, 0.0))
    ctrl.reset(state.com, state.dcm(w))
    foot = SupportPolygon(vec(), p_max, p_max)
    ref = ReferenceFrame(vec(), vec(), vec(), vec())
    n_steps = int(round(spec.time_limit / dt))
    rows = []
    for k in range(n_steps + 1):
        c, cd = float(state.com[0]), float(state.com_vel[0])
        if abs(c) < spec.settle_c and abs(cd) < spec.settle_cd:
            return True, np.array(rows).reshape(-1, 6)
        if k == n_steps or abs(c + cd / w) > spec.fall_radius:
            break
        p_cmd, p = ctrl.step(state.com, state.dcm(w), ref, foot.lower, foot.upper)
        rows.append((k * dt, c, cd, c + cd / w, p_cmd[0], p[0]))
        state = step_dynamics(state, p, k * dt, dt, w, 1.0)
    return False, np.array(rows).reshape(-1, 6)


# ------------------------------------------------------------- Scenario 2


@dataclass(frozen=True)
class PushSweepSpec:
    push_time: float = 2.2
    push_duration: float = 0.01
    direction: tuple = (1.0, 0.0)
    force_lo: float = 0.0
    force_hi: float = 2500.0
    tol: float = 1.0
    strategy: str = "torque_only"

    def __post_init__(self):
        if not self.force_lo < self.force_hi:
            raise ValueError("force_lo must be below force_hi")
        if not self.tol > 0.0:
            raise ValueError("bisection tolerance must be positive")

    def push(self, force: float) -> PushEvent:
        d = np.asarray(self.direction, dtype=float)
        return PushEvent(force * d / np.linalg.norm(d), self.push_time, self.push_duration)


@dataclass
class SweepResult:
    strategy: str
    f_max: float
    probes: list = field(default_factory=list)  # (force, recovered)
    diagnostics: list = field(default_factory=list)


def push_trial(trial: TrialConfig, spec: PushSweepSpec, force: float) -> TrialResult:
    return run_trial(trial, [spec.push(force)])


def max_recoverable_push(trial: TrialConfig, spec: PushSweepSpec, spot_checks=(0.25, 0.5, 0.75)) -> SweepResult:
    """Largest push magnitude (to ``spec.tol``) the walker survives.

    Bisection assumes the verdict is monotone in force. The bracket ends are
    probed first, and forces below the result are spot-checked afterwards;
    a contradiction is reported in ``diagnostics`` and the answer is lowered
    to the last force recovered below the smallest failing probe.
    """
    res = SweepResult(spec.strategy, spec.force_lo)

    def probe(f):
        ok = push_trial(trial, spec, f).recovered
        res.probes.append((f, ok))
        return ok

    lo, hi = spec.force_lo, spec.force_hi
    if not probe(lo):
        res.diagnostics.append(f"falls already at force_lo={lo:g} N")
        res.f_max = lo
        return res
    if probe(hi):
        res.diagnostics.append(f"recovers at force_hi={hi:g} N; bracket too small")
        res.f_max = hi
        return res
    while hi - lo > spec.tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            lo = mid
        else:
            hi = mid
    f_max = lo
    for frac in spot_checks:
        f = spec.force_lo + frac * (f_max - spec.force_lo)
        if not probe(f):
            res.diagnostics.append(f"non-monotone: falls at {f:g} N below bisection result {f_max:g} N")
    failing = [f for f, ok in res.probes if not ok and f <= f_max]
    if failing:
        bound = min(failing)
        f_max = max((f for f, ok in res.probes if ok and f < bound), default=spec.force_lo)
    res.f_max = f_max
    return res


def _sweep_task(args):
    trial, spec = args
    return max_recoverable_push(trial, spec)


def run_push_sweep(trials: dict, spec: PushSweepSpec, jobs: int = 1) -> dict:
    """``max_recoverable_push`` per strategy; ``trials`` maps strategy -> TrialConfig."""
    names = [s for s in STRATEGY_ORDER if s in trials] + [s for s in trials if s not in STRATEGY_ORDER]
    tasks = [(trials[s], PushSweepSpec(spec.push_time, spec.push_duration, spec.direction, spec.force_lo,
                                       spec.force_hi, spec.tol, s)) for s in names]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            out = list(pool.map(_sweep_task, tasks))
    else:
        out = [_sweep_task(t) for t in tasks]
    return dict(zip(names, out))


def improvement_report(f_base: float, f_loc: float, f_time: float) -> dict:
    """Withstanding improvements in percent."""
    return {
        "location_vs_torque_only": 100.0 * (f_loc / f_base - 1.0),
        "time_vs_location": 100.0 * (f_time / f_loc - 1.0),
        "location+time_vs_torque_only": 100.0 * (f_time / f_base - 1.0),
    }


# -------------------------------------------------------------------- CSV


def fmt(x) -> str:
    """Deterministic number formatting; NaN becomes an empty field."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.10g}"


def write_csv(path, header, rows, comment: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_grid_csv(path, grid: GridResult, comment: str) -> Path:
    rows = []
    for i, c in enumerate(grid.c):
        for j, cd in enumerate(grid.cd):
            rows.append((c, cd, "recovered" if grid.recovered[i, j] else "fallen",
                         grid.settle_time[i, j], bool(grid.oracle[i, j])))
    return write_csv(path, ("c0", "cdot0", "verdict", "settle_time", "capturable"), rows, comment)


def write_sweep_csv(path, results: dict, comment: str) -> Path:
    rows = []
    for name, r in results.items():
        for f, ok in r.probes:
            rows.append((name, f, "recovered" if ok else "fallen"))
    for name, r in results.items():
        rows.append((name, r.f_max, "F_max"))
    if all(s in results for s in STRATEGY_ORDER):
        rep = improvement_report(*(results[s].f_max for s in STRATEGY_ORDER))
        for key, pct in rep.items():
            rows.append((key, pct, "improvement_pct"))
    return write_csv(path, ("strategy", "force", "verdict"), rows, comment)


def write_trial_csv(path, result: TrialResult, comment: str) -> Path:
    header = list(LOG_COLUMNS)
    phase_col = header.index("phase")
    rows = []
    for r in result.log:
        out = list(r)
        out[phase_col] = PHASE_NAMES[int(r[phase_col])]
        out[header.index("step")] = int(r[header.index("step")])
        rows.append(out)
    return write_csv(path, header, rows, comment)


def noise_for(variance: float, seed: int, index: int) -> NoiseModel:
    return NoiseModel(variance, trial_seed(seed, index))
