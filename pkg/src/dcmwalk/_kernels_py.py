"""Pure-Python versions of the per-axis hot loops. Mirrors ``_kernels.pyx`` operation for operation."""

import math


def lipm_axis_step(c, cd, p, acc, dt, w):
    """Exact LIPM update over ``dt`` with constant ZMP ``p`` and constant extra acceleration ``acc``."""
    q = p - acc / (w * w)
    d = c - q
    ch = math.cosh(w * dt)
    sh = math.sinh(w * dt)
    return q + d * ch + cd / w * sh, d * w * sh + cd * ch


class AxisController:
    """Steady-state Kalman filter, DCM integrator and LQR feedback for one axis.

    State ordering is ``[c, dcm]``. The estimate held between calls is the
    one-step prediction; :meth:`update` corrects it, produces the ZMP command,
    and predicts forward with the applied (saturated) ZMP.
    """

    __slots__ = (
        "a00", "a01", "a11", "b0", "b1",
        "l00", "l01", "l10", "l11",
        "k_c", "k_z", "k_i", "dt", "xi_limit",
        "c_hat", "z_hat", "c_prior", "z_prior", "xi", "p_cmd", "p_applied",
    )

    def __init__(self, a00, a01, a11, b0, b1, l00, l01, l10, l11, k_c, k_z, k_i, dt, xi_limit):
        self.a00, self.a01, self.a11, self.b0, self.b1 = a00, a01, a11, b0, b1
        self.l00, self.l01, self.l10, self.l11 = l00, l01, l10, l11
        self.k_c, self.k_z, self.k_i = k_c, k_z, k_i
        self.dt, self.xi_limit = dt, xi_limit
        self.c_hat = self.z_hat = self.c_prior = self.z_prior = 0.0
        self.xi = self.p_cmd = self.p_applied = 0.0

    def reset(self, c, z, xi=0.0):
        self.c_hat = self.c_prior = c
        self.z_hat = self.z_prior = z
        self.xi = xi

    def update(self, c_meas, z_meas, c_ref, z_ref, p_ref, p_lo, p_hi):
        rc = c_meas - self.c_prior
        rz = z_meas - self.z_prior
        c_hat = self.c_prior + self.l00 * rc + self.l01 * rz
        z_hat = self.z_prior + self.l10 * rc + self.l11 * rz
        e_c = c_hat - c_ref
        e_z = z_hat - z_ref
        p_cmd = p_ref - (self.k_c * e_c + self.k_z * e_z + self.k_i * self.xi)
        p = p_cmd
        if p < p_lo:
            p = p_lo
        elif p > p_hi:
            p = p_hi
        xi = self.xi + self.dt * e_z
        if xi > self.xi_limit:
            xi = self.xi_limit
        elif xi < -self.xi_limit:
            xi = -self.xi_limit
        self.xi = xi
        self.c_hat = c_hat
        self.z_hat = z_hat
        self.c_prior = self.a00 * c_hat + self.a01 * z_hat + self.b0 * p
        self.z_prior = self.a11 * z_hat + self.b1 * p
        self.p_cmd = p_cmd
        self.p_applied = p
        return p_cmd, p


def simulate_regulation(ctrl, c0, cd0, w, dt, n_steps, p_lo, p_hi, settle_c, settle_cd, fall_radius):
    """Regulate one axis to the origin over a fixed foot.

    Noise-free measurements; returns ``(settle_step, c, cd, steps_run)`` with
    ``settle_step = -1`` if the settle ball was never reached and
    ``steps_run < n_steps`` when the DCM left ``fall_radius``.
    """
    c = c0
    cd = cd0
    ctrl.reset(c, c + cd / w)
    for k in range(n_steps):
        z = c + cd / w
        if abs(c) < settle_c and abs(cd) < settle_cd:
            return k, c, cd, k
        if abs(z) > fall_radius:
            return -1, c, cd, k
        _, p = ctrl.update(c, z, 0.0, 0.0, 0.0, p_lo, p_hi)
        c, cd = lipm_axis_step(c, cd, p, 0.0, dt, w)
    if abs(c) < settle_c and abs(cd) < settle_cd:
        return n_steps, c, cd, n_steps
    return -1, c, cd, n_steps
