import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcmwalk.state_machine import PhaseClock, Side, WalkPhase, initialize_duration, support_foot, tick

DT = 0.002


def test_single_to_double_support():
    clock = PhaseClock(0.8 - DT)
    phase, clock, done = tick(WalkPhase.SINGLE_SUPPORT, clock, DT)
    assert phase is WalkPhase.DOUBLE_SUPPORT and not done


def test_double_support_completes_step():
    clock = PhaseClock(1.0 - DT)
    phase, clock, done = tick(WalkPhase.DOUBLE_SUPPORT, clock, DT)
    assert phase is WalkPhase.SINGLE_SUPPORT and done
    assert clock.t == pytest.approx(0.0, abs=1e-9)


def test_idle_stays_idle_without_start():
    clock = PhaseClock(0.0)
    assert tick(WalkPhase.IDLE, clock, DT) == (WalkPhase.IDLE, clock, False)
    phase, _, _ = tick(WalkPhase.IDLE, clock, DT, "start")
    assert phase is WalkPhase.INITIALIZE


def test_initialize_then_single_support():
    phase, clock = WalkPhase.INITIALIZE, PhaseClock(0.0, T_init=0.2)
    seen = []
    for _ in range(101):
        phase, clock, _ = tick(phase, clock, DT)
        seen.append(phase)
    assert seen[98] is WalkPhase.INITIALIZE
    assert seen[99] is WalkPhase.SINGLE_SUPPORT


def test_stop_only_at_step_boundary():
    phase, clock = WalkPhase.SINGLE_SUPPORT, PhaseClock(0.1)
    phase, clock, _ = tick(phase, clock, DT, "stop")
    assert phase is WalkPhase.SINGLE_SUPPORT and clock.stop_requested
    n = 0
    while phase is not WalkPhase.IDLE:
        phase, clock, done = tick(phase, clock, DT)
        n += 1
    assert done
    assert n * DT == pytest.approx(1.0 - 0.1 - DT, abs=DT)


def test_zero_double_support_passes_in_one_tick():
    clock = PhaseClock(1.0 - DT, T_ss=1.0, T_ds=0.0)
    phase, clock, done = tick(WalkPhase.SINGLE_SUPPORT, clock, DT)
    assert phase is WalkPhase.SINGLE_SUPPORT and done


def test_bad_dt():
    with pytest.raises(ValueError):
        tick(WalkPhase.SINGLE_SUPPORT, PhaseClock(0.0), 0.0)


def test_support_foot_parity():
    assert support_foot(0, Side.LEFT) is Side.LEFT
    assert support_foot(1, Side.LEFT) is Side.RIGHT
    for k in range(10):
        assert support_foot(2 * k, Side.LEFT) is Side.LEFT
    with pytest.raises(ValueError):
        support_foot(-1)


def test_initialize_duration():
    assert initialize_duration(0.2) == 0.2
    assert initialize_duration(0.0) == 0.2


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.sampled_from([(0.8, 0.2), (1.0, 0.0), (0.7, 0.1)]))
def test_no_phase_drift(n_steps, timing):
    T_ss, T_ds = timing
    phase, clock = WalkPhase.SINGLE_SUPPORT, PhaseClock(0.0, T_ss, T_ds)
    steps = ticks = 0
    while steps < n_steps:
        phase, clock, done = tick(phase, clock, DT)
        ticks += 1
        steps += done
    assert abs(ticks * DT - n_steps * (T_ss + T_ds)) <= DT + 1e-9
