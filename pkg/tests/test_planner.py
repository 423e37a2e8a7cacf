import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from dcmwalk.core_model import natural_frequency, propagate_dcm, vec
from dcmwalk.planner import (
    GaitParams,
    PlanningError,
    SwingTrajectory,
    clamp_step,
    com_step_boundaries,
    home_footprints,
    plan_com,
    plan_dcm,
    plan_footprints,
    plan_swing,
    plan_walk,
    plan_zmp,
)
from dcmwalk.state_machine import Side, WalkPhase

W = natural_frequency(1.0)


def shoot_bvp(p, c0, cf, t0, tf, omega, times):
    """Shooting on c'' = w^2 (c - p): find c'(t0) so c(tf) = cf (linear, so two shots)."""

    def end(v0):
        sol = solve_ivp(lambda t, x: [x[1], omega**2 * (x[0] - p)], (t0, tf), [c0, v0],
                        method="DOP853", rtol=1e-13, atol=1e-14)
        return sol.y[0, -1]

    a, b = end(0.0), end(1.0)
    v0 = (cf - a) / (b - a)
    sol = solve_ivp(lambda t, x: [x[1], omega**2 * (x[0] - p)], (t0, tf), [c0, v0],
                    method="DOP853", rtol=1e-13, atol=1e-14, t_eval=times)
    return sol.y[0]


def test_diagonal_footprints():
    prints = plan_footprints(6, GaitParams())
    expected = [(0.5, 0.6), (0.5, 0.4), (1.0, 1.1), (1.0, 0.9), (1.5, 1.6), (1.5, 1.4)]
    assert [tuple(np.round(f.position, 12)) for f in prints] == expected
    assert [f.side for f in prints] == [Side.LEFT, Side.RIGHT] * 3
    # each advanced by SL from the last same-side print
    homes = home_footprints(GaitParams())
    last = {s: fp.position for s, fp in homes.items()}
    for f in prints:
        assert np.allclose(f.position - last[f.side], (0.5, 0.5))
        last[f.side] = f.position


def test_walking_in_place_footprints():
    p = GaitParams(step_length=vec())
    homes = home_footprints(p)
    for f in plan_footprints(5, p):
        assert np.array_equal(f.position, homes[f.side].position)


def test_velocity_command():
    p = GaitParams()
    a = plan_footprints(2, p, velocity=vec(0.25, 0.0))
    b = plan_footprints(2, p, step_length=vec(0.5, 0.0))
    assert np.allclose([f.position for f in a], [f.position for f in b])


def test_footprint_errors():
    with pytest.raises(PlanningError):
        plan_footprints(0, GaitParams())
    with pytest.raises(PlanningError):
        plan_footprints(2, GaitParams(T_ss=-1.0))
    with pytest.raises(PlanningError):
        plan_footprints(2, GaitParams(), step_length=vec(1.0, 0.0))


def test_shift_clamped_to_max_step():
    p = GaitParams(step_length=vec(0.5, 0.0), lateral_offset=0.0)
    f = plan_footprints(1, p, shift=vec(0.7, 0.0))[0]
    assert f.position == pytest.approx([0.95, 0.0])
    pos, clamped = clamp_step(vec(), vec(0.5, 0.0), vec(1.2, 0.0), 0.95)
    assert clamped and pos == pytest.approx([0.95, 0.0])
    pos, clamped = clamp_step(vec(), vec(0.5, 0.0), vec(0.6, 0.0), 0.95)
    assert not clamped and pos == pytest.approx([0.6, 0.0])


@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-2, 2), st.floats(-2, 2))
def test_clamp_stays_in_reach_on_adjustment_line(nx, ny, sx, sy):
    support = vec(0.0, -0.1)
    nominal = support + vec(nx, ny)
    target = nominal + vec(sx, sy)
    pos, clamped = clamp_step(support, nominal, target, 0.95)
    assert np.linalg.norm(pos - support) <= 0.95 + 1e-12
    if clamped:
        assert np.linalg.norm(pos - support) == pytest.approx(0.95)
        d = pos - nominal
        assert abs(d[0] * sy - d[1] * sx) < 1e-9
        assert float(d @ vec(sx, sy)) >= -1e-12


def test_plan_zmp_examples():
    p = GaitParams()
    fi, fn = vec(0.0, -0.1), vec(0.5, 0.1)
    assert np.array_equal(plan_zmp(0.0, fi, fn, p), fi)
    assert plan_zmp(0.9, fi, fn, p) == pytest.approx(0.5 * (fi + fn))
    assert plan_zmp(1.0 - 1e-12, fi, fn, p) == pytest.approx(fn)
    with pytest.raises(ValueError):
        plan_zmp(1.5, fi, fn, p)


def test_swing_boundaries_and_apex():
    p = GaitParams()
    a, b = vec(0.0, 0.1), vec(0.5, 0.6)
    assert np.array_equal(plan_swing(0.0, a, b, p), [0.0, 0.1, 0.0])
    assert np.allclose(plan_swing(p.T_ss, a, b, p), [0.5, 0.6, 0.0], atol=0.0)
    mid = plan_swing(p.T_ss / 2, a, b, p)
    assert mid[2] == pytest.approx(0.025, abs=1e-9)
    assert mid[:2] == pytest.approx(0.5 * (a + b))
    zs = [plan_swing(t, a, b, p)[2] for t in np.linspace(0, p.T_ss, 201)]
    assert max(zs) == pytest.approx(0.025, abs=1e-9)


def test_swing_retarget_is_c1():
    sw = SwingTrajectory(vec(0, 0.1), vec(0.5, 0.1), 0.0, 0.8, 0.025)
    t = 0.3
    p0, v0 = sw.position(t), sw.velocity(t)
    sw.retarget(t, vec(0.7, 0.15), 0.7)
    assert np.allclose(sw.position(t), p0, atol=1e-15)
    assert np.allclose(sw.velocity(t + 1e-7), v0, atol=1e-5)
    assert np.allclose(sw.position(0.7), [0.7, 0.15, 0.0], atol=1e-15)


def test_plan_com_boundaries():
    c0, cf, p = vec(-0.05, 0.1), vec(0.05, -0.02), vec(0.01, 0.03)
    assert plan_com(0.2, p, c0, cf, 0.2, 1.2, W)[0] == pytest.approx(c0, abs=1e-12)
    assert plan_com(1.2, p, c0, cf, 0.2, 1.2, W)[0] == pytest.approx(cf, abs=1e-12)
    for t in np.linspace(0, 1, 7):
        assert np.allclose(plan_com(t, p, p, p, 0.0, 1.0, W)[0], p)
    with pytest.raises(PlanningError):
        plan_com(0.0, p, c0, cf, 1.0, 1.0, W)


def test_plan_com_matches_shooting_oracle():
    times = np.linspace(0.0, 1.0, 12)[1:-1]
    oracle = shoot_bvp(0.0, -0.05, 0.05, 0.0, 1.0, 3.1321, times)
    ours = [plan_com(t, np.array([0.0]), np.array([-0.05]), np.array([0.05]), 0.0, 1.0, 3.1321)[0][0] for t in times]
    assert np.allclose(ours, oracle, atol=1e-6)


@settings(max_examples=30)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 2.0))
def test_plan_com_solves_lipm(p, pf, c0, cf, T):
    # second difference of the closed form equals w^2 (c - p(t)), including a linear ZMP ramp
    P, PF, C0, CF = (np.array([v]) for v in (p, pf, c0, cf))
    assert plan_com(0.0, P, C0, CF, 0.0, T, W, PF)[0][0] == pytest.approx(c0, abs=1e-12)
    assert plan_com(T, P, C0, CF, 0.0, T, W, PF)[0][0] == pytest.approx(cf, abs=1e-12)
    t, h = 0.5 * T, 1e-4
    cm, c, cp = (plan_com(t + k * h, P, C0, CF, 0.0, T, W, PF)[0][0] for k in (-1, 0, 1))
    acc = (cp - 2 * c + cm) / h**2
    pt = p + (pf - p) * t / T
    assert acc == pytest.approx(W**2 * (c - pt), abs=1e-4 * (1 + abs(W**2 * (c - pt))))


def test_plan_dcm():
    assert plan_dcm(vec(0, 0), vec(0.31321, 0), 3.1321) == pytest.approx([0.1, 0.0])


@pytest.fixture(scope="module")
def diagonal():
    return plan_walk(6, GaitParams(), W)


def test_com_is_c1(diagonal):
    plan = diagonal.plan
    for s in plan.segments[1:]:
        t = s.t0
        (a, va), (b, vb) = plan.com(t - 1e-9), plan.com(t + 1e-9)
        assert np.allclose(a, b, atol=1e-8)
        assert np.allclose(va, vb, atol=1e-7)
        assert np.allclose(plan.zmp(t - 1e-9), plan.zmp(t + 1e-9), atol=1e-7)


def test_com_boundaries_steady_gait():
    p = GaitParams(step_length=vec(0.3, 0.0), T_ss=1.0, T_ds=0.0)
    wp = plan_walk(20, p, W)
    S = wp.supports
    for k in (8, 9, 10):
        c0, cf, t0, tf = com_step_boundaries(wp.plan, k)
        assert c0 == pytest.approx(0.5 * (S[k - 1] + S[k]), abs=1e-9)
        assert cf == pytest.approx(0.5 * (S[k] + S[k + 1]), abs=1e-9)
        assert tf - t0 == pytest.approx(1.0)


def test_walking_in_place_boundaries_on_midline():
    p = GaitParams(step_length=vec(), T_ss=1.0, T_ds=0.0)
    wp = plan_walk(20, p, W)
    c0, cf, _, _ = com_step_boundaries(wp.plan, 10)
    assert c0 == pytest.approx(vec(), abs=1e-9)
    assert cf == pytest.approx(vec(), abs=1e-9)


def test_plan_starts_at_feet_midpoint(diagonal):
    assert np.allclose(diagonal.plan.com(0.0)[0], vec(), atol=1e-12)
    assert diagonal.plan.phase_at(0.0) is WalkPhase.INITIALIZE
    with pytest.raises(PlanningError):
        com_step_boundaries(diagonal.plan, 99)


def test_dcm_leads_com_forward():
    wp = plan_walk(6, GaitParams(step_length=vec(0.5, 0.0), T_ss=1.0, T_ds=0.0), W)
    for t0 in wp.step_starts:
        for t in np.linspace(t0, t0 + 1.0, 25, endpoint=False):
            assert wp.plan.dcm(t)[0] >= wp.plan.com(t)[0][0]


def test_plan_ends_captured(diagonal):
    plan = diagonal.plan
    final = plan.segments[-1].p1
    assert np.allclose(plan.dcm(plan.t_end), final, atol=1e-12)
    assert np.allclose(plan.com(plan.t_end + 5.0)[0], final, atol=1e-6)


def test_sampled_zmp_carries_dcm_exactly(diagonal):
    plan, dt = diagonal.plan, 0.002
    for t in np.arange(0.0, plan.t_end, 0.0734):
        p = plan.sampled_zmp(t, dt)
        assert np.allclose(propagate_dcm(plan.dcm(t), p, dt, W), plan.dcm(t + dt), atol=1e-12)
    # constant segment: same as the planned ZMP
    t = diagonal.step_starts[1] + 0.3
    assert np.allclose(plan.sampled_zmp(t, dt), plan.zmp(t), atol=1e-12)


def test_swing_at(diagonal):
    t0 = diagonal.step_starts[0]
    assert diagonal.swing_at(t0 + 0.4)[2] == pytest.approx(0.025, abs=1e-9)
    assert diagonal.swing_at(0.0) is None
