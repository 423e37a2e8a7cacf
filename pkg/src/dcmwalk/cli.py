"""dcmwalk command line: plan, walk, scenario1, scenario2."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from dcmwalk.config import ConfigError, RunConfig
from dcmwalk.planner import plan_walk
from dcmwalk.scenarios import (
    STRATEGY_ORDER,
    GridSpec,
    PushSweepSpec,
    improvement_report,
    noise_for,
    push_trial,
    run_push_sweep,
    run_stability_grid,
    write_csv,
    write_grid_csv,
    write_sweep_csv,
    write_trial_csv,
)
from dcmwalk.simulation import TrialConfig, run_trial


def _comment(cfg: RunConfig, extra: str = "") -> str:
    s = f"config_hash={cfg.config_hash()}, seed={cfg.seed}"
    return f"{s}, {extra}" if extra else s


def _trial_config(cfg: RunConfig, which: str, n_steps: int, strategy: str, noise) -> TrialConfig:
    return TrialConfig(
        gait=cfg.gait(which),
        n_steps=n_steps,
        gains=cfg.gains(),
        robot=cfg.robot,
        adjuster=cfg.adjuster(),
        strategy=strategy,
        noise=noise,
        fall_radius=cfg.fall_radius,
        com_fall_radius=cfg.com_fall_radius,
        settle_dcm_error=cfg.settle_dcm_error,
    )


def dump_gains(cfg: RunConfig, out: Path) -> Path:
    g = cfg.gains()
    rows = g.rows() + [("closed_loop_radius", 0, 0, g.closed_loop_radius()), ("omega", 0, 0, g.omega)]
    return write_csv(out / "gains.csv", ("matrix", "row", "col", "value"), rows, _comment(cfg))


def cmd_plan(cfg: RunConfig, out: Path) -> int:
    params = cfg.gait("plan")
    walk = plan_walk(cfg.plan_n_steps, params, cfg.omega)
    plan = walk.plan
    n = int(round(plan.t_end / cfg.dt))
    rows = []
    for k in range(n + 1):
        t = k * cfg.dt
        ref = plan.reference(t)
        sw = walk.swing_at(t)
        sw = (np.nan, np.nan, np.nan) if sw is None else sw
        rows.append((t, plan.phase_at(t).value, ref.zmp_ref[0], ref.zmp_ref[1], ref.com_ref[0], ref.com_ref[1],
                     ref.com_vel_ref[0], ref.com_vel_ref[1], ref.dcm_ref[0], ref.dcm_ref[1], *sw))
    header = ("t", "phase", "zmp_x", "zmp_y", "com_x", "com_y", "comd_x", "comd_y", "dcm_x", "dcm_y",
              "swing_x", "swing_y", "swing_z")
    write_csv(out / "plan.csv", header, rows, _comment(cfg))
    fp = [(f.index, f.side.value, f.position[0], f.position[1]) for f in walk.landings]
    write_csv(out / "footprints.csv", ("index", "side", "x", "y"), fp, _comment(cfg))
    apex = max(r[-1] for r in rows if not np.isnan(r[-1]))
    print(f"plan: {len(walk.landings)} footprints, {len(rows)} samples, t_end={plan.t_end:.3f} s, "
          f"swing apex={apex:.4f} m")
    return 0


def cmd_walk(cfg: RunConfig, out: Path) -> int:
    noise = noise_for(cfg.walk_noise_variance, cfg.seed, 0)
    trial = _trial_config(cfg, "walk", cfg.walk_n_steps, cfg.walk_strategy, noise)
    res = run_trial(trial)
    write_trial_csv(out / "trial_walk.csv", res, _comment(cfg))
    print(f"walk: {res.verdict}, rms DCM error={res.rms_dcm_error:.5f} m, peak={res.peak_dcm_error:.5f} m")
    return 0


def cmd_scenario1(cfg: RunConfig, out: Path) -> int:
    spec = GridSpec(cfg.s1_c_min, cfg.s1_c_max, cfg.s1_c_step, cfg.s1_cd_min, cfg.s1_cd_max, cfg.s1_cd_step,
                    cfg.s1_time_limit, cfg.s1_settle_c, cfg.s1_settle_cd, cfg.fall_radius)
    grid = run_stability_grid(cfg.gains(), spec, cfg.foot_length / 2.0, cfg.jobs)
    write_grid_csv(out / "grid.csv", grid, _comment(cfg))
    print(f"scenario1: {int(grid.recovered.sum())}/{grid.n_cells} recovered, "
          f"oracle cells {int(grid.oracle.sum())}, coverage {100 * grid.coverage():.1f}%, "
          f"contained={grid.contained()}, symmetric={grid.symmetric()}")
    return 0


def push_phase(cfg: RunConfig) -> str:
    """Where the push lands in the nominal gait."""
    params = cfg.gait("s2")
    walk = plan_walk(cfg.s2_n_steps, params, cfg.omega)
    t = cfg.s2_push_time
    phase = walk.plan.phase_at(t)
    for k, t0 in enumerate(walk.step_starts):
        if t0 - 1e-9 <= t < t0 + params.T_ss + params.T_ds - 1e-9:
            return f"push_phase=step {k} {phase.value} at {t - t0:.3f} s into the step"
    return f"push_phase={phase.value}"


def cmd_scenario2(cfg: RunConfig, out: Path) -> int:
    spec = PushSweepSpec(cfg.s2_push_time, cfg.s2_push_duration, tuple(cfg.s2_push_direction),
                         cfg.s2_force_lo, cfg.s2_force_hi, cfg.s2_tol)
    trials = {
        s: _trial_config(cfg, "s2", cfg.s2_n_steps, s, noise_for(cfg.s2_noise_variance, cfg.seed, i))
        for i, s in enumerate(STRATEGY_ORDER) if s in cfg.s2_strategies
    }
    results = run_push_sweep(trials, spec, cfg.jobs)
    where = push_phase(cfg)
    write_sweep_csv(out / "sweep.csv", results, _comment(cfg, where))
    for name, r in results.items():
        log = push_trial(trials[name], PushSweepSpec(spec.push_time, spec.push_duration, spec.direction,
                                                     spec.force_lo, spec.force_hi, spec.tol, name), r.f_max)
        write_trial_csv(out / f"trial_{name.replace('+', '_')}.csv", log, _comment(cfg, f"force={r.f_max:.10g}"))
        print(f"scenario2: {name:14s} F_max={r.f_max:8.2f} N")
        for d in r.diagnostics:
            print(f"  warning: {d}", file=sys.stderr)
    if all(s in results for s in STRATEGY_ORDER):
        rep = improvement_report(*(results[s].f_max for s in STRATEGY_ORDER))
        for k, v in rep.items():
            print(f"scenario2: {k}: {v:+.1f}%")
    print(f"scenario2: {where}")
    return 0


COMMANDS = {
    "plan": cmd_plan,
    "walk": cmd_walk,
    "scenario1": cmd_scenario1,
    "scenario2": cmd_scenario2,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dcmwalk", description="DCM walking pattern generation and push recovery.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON config file (flat keys, see README)")
    ap.add_argument("--seed", type=int, help="RNG seed, unsigned 64-bit (overrides config)")
    ap.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    ap.add_argument("--jobs", type=int, help="worker processes for grid/sweep (overrides config)")
    ap.add_argument("--dump-gains", action="store_true", help="also write gains.csv")
    return ap


def load_config(args) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"{args.config}: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError([f"{args.config}: top level must be a JSON object"])
    if args.seed is not None:
        data["seed"] = args.seed
    if args.jobs is not None:
        data["jobs"] = args.jobs
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"dcmwalk: {exc}", file=sys.stderr)
        return 2
    except TypeError as exc:
        print(f"dcmwalk: invalid configuration: {exc}", file=sys.stderr)
        return 2
    args.out.mkdir(parents=True, exist_ok=True)
    if args.dump_gains:
        dump_gains(cfg, args.out)
    return COMMANDS[args.command](cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
