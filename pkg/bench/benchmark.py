"""Compiled vs pure-Python kernels on the single-support regulation grid.

    python3 bench/benchmark.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from dcmwalk import _kernels_py
from dcmwalk.config import RunConfig
from dcmwalk.kernels import compiled_backend


def run_grid(backend, gains, c_values, cd_values, n_steps, p_max):
    A, B, K, L = gains.A_d, gains.B_d, gains.K, gains.L
    ctrl = backend.AxisController(A[0, 0], A[0, 1], A[1, 1], B[0, 0], B[1, 0],
                                  L[0, 0], L[0, 1], L[1, 0], L[1, 1],
                                  K[0, 0], K[0, 1], K[0, 2], gains.dt, gains.integral_limit)
    out = np.empty((len(c_values), len(cd_values)))
    for i, c0 in enumerate(c_values):
        for j, cd0 in enumerate(cd_values):
            out[i, j] = backend.simulate_regulation(ctrl, float(c0), float(cd0), gains.omega, gains.dt, n_steps,
                                                    -p_max, p_max, 1e-3, 1e-2, 1.2)[0]
    return out


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = RunConfig()
    gains = cfg.gains()
    c = np.linspace(cfg.s1_c_min, cfg.s1_c_max, 21)
    cd = np.linspace(cfg.s1_cd_min, cfg.s1_cd_max, 21)
    n_steps = int(round(cfg.s1_time_limit / gains.dt))
    p_max = cfg.foot_length / 2

    t_py, ref = best_of(lambda: run_grid(_kernels_py, gains, c, cd, n_steps, p_max), args.repeat)
    print(f"python  : {t_py * 1e3:9.1f} ms  (441 cells)")
    if compiled_backend is None:
        print("cython  : not built (pip install -e . --no-build-isolation)")
        return 0
    t_cy, got = best_of(lambda: run_grid(compiled_backend, gains, c, cd, n_steps, p_max), args.repeat)
    same = np.array_equal(np.isnan(ref), np.isnan(got))
    diff = np.nanmax(np.abs(ref - got)) if np.any(~np.isnan(ref)) else 0.0
    print(f"cython  : {t_cy * 1e3:9.1f} ms  speedup x{t_py / t_cy:.0f}")
    print(f"verdicts identical: {same}, max settle-time difference {diff:.2e} s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
