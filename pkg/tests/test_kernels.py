import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcmwalk import BACKEND, kernels
from dcmwalk import _kernels_py as pure

compiled = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")

W = 3.1321
DT = 0.002
small = st.floats(-0.3, 0.3)


def test_backend_flag():
    assert BACKEND in ("cython", "python")
    assert (BACKEND == "cython") == (compiled is not None)


def _controller(mod, gains):
    A, B, K, L = gains.A_d, gains.B_d, gains.K, gains.L
    return mod.AxisController(A[0, 0], A[0, 1], A[1, 1], B[0, 0], B[1, 0], L[0, 0], L[0, 1], L[1, 0], L[1, 1],
                              K[0, 0], K[0, 1], K[0, 2], gains.dt, gains.integral_limit)


def test_lipm_step_closed_form():
    c, cd = pure.lipm_axis_step(0.1, 0.2, 0.05, 0.0, DT, W)
    ch, sh = math.cosh(W * DT), math.sinh(W * DT)
    assert c == pytest.approx(0.05 + 0.05 * ch + 0.2 / W * sh, abs=1e-15)
    assert cd == pytest.approx(0.05 * W * sh + 0.2 * ch, abs=1e-15)


@needs_compiled
@given(small, small, small, st.floats(-10, 10))
def test_lipm_step_backends_agree(c, cd, p, acc):
    a = pure.lipm_axis_step(c, cd, p, acc, DT, W)
    b = compiled.lipm_axis_step(c, cd, p, acc, DT, W)
    assert a[0] == pytest.approx(b[0], abs=1e-15)
    assert a[1] == pytest.approx(b[1], abs=1e-14)


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(small, small, small, small, small), min_size=1, max_size=40))
def test_controller_backends_agree(gains, seq):
    ca, cb = _controller(pure, gains), _controller(compiled, gains)
    ca.reset(0.01, 0.02)
    cb.reset(0.01, 0.02)
    for c, z, cr, zr, pr in seq:
        a = ca.update(c, z, cr, zr, pr, -0.075, 0.075)
        b = cb.update(c, z, cr, zr, pr, -0.075, 0.075)
        assert a == pytest.approx(b, abs=1e-13)
        assert (ca.c_prior, ca.z_prior, ca.xi) == pytest.approx((cb.c_prior, cb.z_prior, cb.xi), abs=1e-13)


@needs_compiled
@settings(max_examples=30, deadline=None)
@given(st.floats(-0.2, 0.2), st.floats(-1.0, 1.0))
def test_regulation_backends_agree(gains, c0, cd0):
    args = (c0, cd0, W, DT, 1000, -0.075, 0.075, 0.01, 0.02, 1.2)
    a = pure.simulate_regulation(_controller(pure, gains), *args)
    b = compiled.simulate_regulation(_controller(compiled, gains), *args)
    assert a[0] == b[0] and a[3] == b[3]
    assert a[1] == pytest.approx(b[1], abs=1e-12)


def test_regulation_outcomes(gains):
    ctrl = _controller(pure, gains)
    settle, c, cd, n = pure.simulate_regulation(ctrl, 0.0, 0.0, W, DT, 1000, -0.075, 0.075, 0.01, 0.02, 1.2)
    assert settle == 0 and n == 0
    settle, c, cd, n = pure.simulate_regulation(ctrl, 0.2, 1.0, W, DT, 1000, -0.075, 0.075, 0.01, 0.02, 1.2)
    assert settle == -1 and n < 1000


def test_environment_forces_python_backend():
    import os
    import subprocess
    import sys

    env = dict(os.environ, DCMWALK_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import dcmwalk; print(dcmwalk.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
