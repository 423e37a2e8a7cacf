import numpy as np
import pytest

from dcmwalk.core_model import LipmState, vec
from dcmwalk.plant import NoiseModel, PushEvent
from dcmwalk.simulation import COL, PHASE_CODES, TrialConfig, run_trial
from dcmwalk.state_machine import WalkPhase


def trial(cfg, which="plan", n=6, strategy="torque_only", noise=None, **kw):
    return TrialConfig(cfg.gait(which), n, cfg.gains(), cfg.robot, cfg.adjuster(), strategy,
                       noise or NoiseModel(), **kw)


def test_nominal_walk_tracks(cfg):
    res = run_trial(trial(cfg))
    assert res.recovered
    assert res.peak_dcm_error < 0.01
    assert res.log[-1, COL["phase"]] == PHASE_CODES[WalkPhase.IDLE]
    assert int(res.log[-1, COL["step"]]) == 6
    fp = np.array(res.footprints[1:])
    assert np.allclose(fp, [[0.5, 0.6], [0.5, 0.4], [1, 1.1], [1, 0.9], [1.5, 1.6], [1.5, 1.4]])


@pytest.mark.parametrize("strategy", ["location", "location+time"])
def test_no_spurious_adjustment(cfg, strategy):
    res = run_trial(trial(cfg, "s2", 4, strategy))
    assert res.recovered
    assert res.events == []
    L = res.log
    assert np.nanmax(np.abs(L[:, COL["dp_x"]:COL["dp_y"] + 1])) == 0.0
    assert np.nanmax(np.abs(L[:, COL["dt_adj"]])) == 0.0
    assert np.nanmax(np.abs(L[:, COL["T_ss"]] - 0.8)) == 0.0


def test_noiseless_zmp_equals_reference(cfg):
    res = run_trial(trial(cfg, "walk"))
    L = res.log
    after = L[:, COL["t"]] > 0.5
    err = np.abs(L[after, COL["p_x"]:COL["p_y"] + 1] - L[after, COL["zmp_ref_x"]:COL["zmp_ref_y"] + 1])
    assert err.max() < 1e-6


def test_blow_up_is_a_fall(cfg):
    res = run_trial(trial(cfg, "s2", 4), [PushEvent(vec(1e9, 0.0), 0.5, 0.01)])
    assert res.verdict == "fallen"
    assert res.fall_time is not None and res.fall_time < 0.6


def test_initial_state_off_reference(cfg):
    s = LipmState(vec(0.02, 0.0), vec())
    res = run_trial(trial(cfg, "s2", 4), initial_state=s)
    assert res.recovered
    assert res.log[0, COL["com_x"]] == 0.02


def test_time_limit(cfg):
    res = run_trial(trial(cfg, "s2", 4, time_limit=1.0))
    assert res.log[-1, COL["t"]] < 1.0
    assert len(res.log) == 500


def test_noisy_runs_are_reproducible(cfg):
    a = run_trial(trial(cfg, "walk", noise=NoiseModel(6.25e-4, 5)))
    b = run_trial(trial(cfg, "walk", noise=NoiseModel(6.25e-4, 5)))
    c = run_trial(trial(cfg, "walk", noise=NoiseModel(6.25e-4, 6)))
    assert np.array_equal(a.log, b.log, equal_nan=True)
    assert not np.array_equal(a.log, c.log, equal_nan=True)


def _landing_shift(cfg, force):
    res = run_trial(trial(cfg, "s2", 4, "location"), [PushEvent(vec(force, 0.0), 2.2, 0.01)])
    L = res.log
    step2 = (L[:, COL["step"]] == 2) & (L[:, COL["phase"]] == PHASE_CODES[WalkPhase.SINGLE_SUPPORT])
    return np.max(L[step2, COL["step_disp"]]), res


def test_landing_displacement_monotone_in_push(cfg):
    disps = [_landing_shift(cfg, f)[0] for f in (100, 300, 600, 900, 1200)]
    assert all(b >= a - 1e-12 for a, b in zip(disps, disps[1:]))
    assert disps[-1] <= 0.95 + 1e-12


def test_adjusted_landing_respects_limits(cfg):
    res = run_trial(trial(cfg, "s2", 8, "location+time"), [PushEvent(vec(1800, 0.0), 2.2, 0.01)])
    L = res.log
    assert np.nanmax(L[:, COL["step_disp"]]) <= 0.95 + 1e-9
    assert np.nanmax(np.abs(L[:, COL["T_ss"]] - 0.8)) <= 0.2 + 1e-9
    kinds = {e.kind for e in res.events}
    assert "start" in kinds and "commit" in kinds
    assert np.nanmax(L[:, COL["clamped"]]) == 1.0
