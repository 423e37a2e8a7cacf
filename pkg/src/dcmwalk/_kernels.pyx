# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-axis hot loops. Semantics match ``_kernels_py`` exactly."""

from libc.math cimport cosh, sinh, fabs


cpdef tuple lipm_axis_step(double c, double cd, double p, double acc, double dt, double w):
    cdef double q = p - acc / (w * w)
    cdef double d = c - q
    cdef double ch = cosh(w * dt)
    cdef double sh = sinh(w * dt)
    return q + d * ch + cd / w * sh, d * w * sh + cd * ch


cdef class AxisController:
    cdef public double a00, a01, a11, b0, b1
    cdef public double l00, l01, l10, l11
    cdef public double k_c, k_z, k_i, dt, xi_limit
    cdef public double c_hat, z_hat, c_prior, z_prior, xi, p_cmd, p_applied

    def __init__(self, double a00, double a01, double a11, double b0, double b1,
                 double l00, double l01, double l10, double l11,
                 double k_c, double k_z, double k_i, double dt, double xi_limit):
        self.a00 = a00; self.a01 = a01; self.a11 = a11; self.b0 = b0; self.b1 = b1
        self.l00 = l00; self.l01 = l01; self.l10 = l10; self.l11 = l11
        self.k_c = k_c; self.k_z = k_z; self.k_i = k_i
        self.dt = dt; self.xi_limit = xi_limit
        self.c_hat = 0.0; self.z_hat = 0.0; self.c_prior = 0.0; self.z_prior = 0.0
        self.xi = 0.0; self.p_cmd = 0.0; self.p_applied = 0.0

    cpdef reset(self, double c, double z, double xi=0.0):
        self.c_hat = c; self.c_prior = c
        self.z_hat = z; self.z_prior = z
        self.xi = xi

    cdef inline double _update(self, double c_meas, double z_meas, double c_ref, double z_ref,
                               double p_ref, double p_lo, double p_hi):
        cdef double rc = c_meas - self.c_prior
        cdef double rz = z_meas - self.z_prior
        cdef double c_hat = self.c_prior + self.l00 * rc + self.l01 * rz
        cdef double z_hat = self.z_prior + self.l10 * rc + self.l11 * rz
        cdef double e_c = c_hat - c_ref
        cdef double e_z = z_hat - z_ref
        cdef double p_cmd = p_ref - (self.k_c * e_c + self.k_z * e_z + self.k_i * self.xi)
        cdef double p = p_cmd
        if p < p_lo:
            p = p_lo
        elif p > p_hi:
            p = p_hi
        cdef double xi = self.xi + self.dt * e_z
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
        return p

    cpdef tuple update(self, double c_meas, double z_meas, double c_ref, double z_ref,
                       double p_ref, double p_lo, double p_hi):
        cdef double p = self._update(c_meas, z_meas, c_ref, z_ref, p_ref, p_lo, p_hi)
        return self.p_cmd, p


def simulate_regulation(AxisController ctrl, double c0, double cd0, double w, double dt,
                        long n_steps, double p_lo, double p_hi, double settle_c,
                        double settle_cd, double fall_radius):
    cdef double c = c0, cd = cd0, z, p, d
    cdef double ch = cosh(w * dt), sh = sinh(w * dt)
    cdef long k
    ctrl.reset(c, c + cd / w)
    for k in range(n_steps):
        z = c + cd / w
        if fabs(c) < settle_c and fabs(cd) < settle_cd:
            return k, c, cd, k
        if fabs(z) > fall_radius:
            return -1, c, cd, k
        p = ctrl._update(c, z, 0.0, 0.0, 0.0, p_lo, p_hi)
        d = c - p
        c, cd = p + d * ch + cd / w * sh, d * w * sh + cd * ch
    if fabs(c) < settle_c and fabs(cd) < settle_cd:
        return n_steps, c, cd, n_steps
    return -1, c, cd, n_steps
