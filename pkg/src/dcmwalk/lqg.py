"""LQG tracking of the COM/DCM reference.

Per axis the plant is ``d/dt [c, dcm] = [[-w, w], [0, w]] [c, dcm] + [0, -w]^T p``.
Gains come from discrete Riccati equations solved with the structured doubling
algorithm: an LQR over ``[c error, dcm error, dcm error integral]`` and a
steady-state Kalman filter over ``[c, dcm]`` with both states measured.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from dcmwalk import kernels


class RiccatiError(RuntimeError):
    """The Riccati iteration did not converge."""


@dataclass(frozen=True)
class AxisStateSpace:
    A: np.ndarray
    B: np.ndarray
    omega: float


def build_state_space(omega: float) -> AxisStateSpace:
    if not omega > 0.0:
        raise ValueError("omega must be positive")
    A = np.array([[-omega, omega], [0.0, omega]])
    B = np.array([[0.0], [-omega]])
    return AxisStateSpace(A, B, omega)


def discretize(ss: AxisStateSpace, dt: float):
    """Zero-order-hold discretization via the exponential of ``[[A, B], [0, 0]]``."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    n, m = ss.B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = ss.A
    M[:n, n:] = ss.B
    E = scipy.linalg.expm(M * dt)
    return E[:n, :n], E[:n, n:]


def dare_residual(A, B, Q, R, P) -> float:
    """Frobenius norm of ``A'PA - P - A'PB (R + B'PB)^-1 B'PA + Q``."""
    BtPA = B.T @ P @ A
    return float(np.linalg.norm(A.T @ P @ A - P - BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA) + Q))


def solve_dare(A, B, Q, R, tol: float = 1e-15, max_iter: int = 200) -> np.ndarray:
    """Stabilizing solution of the discrete algebraic Riccati equation.

    Structured doubling: with ``G = B R^-1 B'`` the iteration

        A <- A (I + G H)^-1 A
        G <- G + A (I + G H)^-1 G A'
        H <- H + A' H (I + G H)^-1 A

    converges quadratically to ``H = P`` for stabilizable/detectable data.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n = A.shape[0]
    eye = np.eye(n)
    Ak = A.copy()
    G = B @ np.linalg.solve(R, B.T)
    H = Q.copy()
    for _ in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            H_next, G_next, A_next = _sda_step(Ak, G, H, eye)
        if not np.all(np.isfinite(H_next)):
            break
        change = np.linalg.norm(H_next - H, 1) / max(1.0, np.linalg.norm(H_next, 1))
        Ak, G, H = A_next, G_next, H_next
        if change < tol:
            return H
    raise RiccatiError(f"doubling iteration did not converge in {max_iter} steps")


def _sda_step(Ak, G, H, eye):
    W = eye + G @ H
    W_A = np.linalg.solve(W, Ak)
    W_G = np.linalg.solve(W, G)
    G_next = G + Ak @ W_G @ Ak.T
    H_next = H + Ak.T @ H @ W_A
    return 0.5 * (H_next + H_next.T), 0.5 * (G_next + G_next.T), Ak @ W_A


def augment_integral(A_d, B_d, dt: float):
    """Append the DCM-error integral ``x_i[k+1] = x_i[k] + dt * dcm_err[k]``."""
    Aa = np.zeros((3, 3))
    Aa[:2, :2] = A_d
    Aa[2, 1] = dt
    Aa[2, 2] = 1.0
    Ba = np.vstack([B_d, np.zeros((1, B_d.shape[1]))])
    return Aa, Ba


def solve_lqr(A_d, B_d, Q, R):
    """Discrete LQR: ``(K, P)`` with ``u = -K x``."""
    A_d = np.atleast_2d(A_d)
    B_d = np.atleast_2d(B_d)
    R = np.atleast_2d(R)
    P = solve_dare(A_d, B_d, Q, R)
    K = np.linalg.solve(R + B_d.T @ P @ B_d, B_d.T @ P @ A_d)
    return K, P


def design_kalman(A_d, C, process_cov, meas_cov):
    """Steady-state Kalman gain for ``x+ = A x + w``, ``y = C x + v``.

    Returns ``(L, P_prior, P_post)``; ``L`` corrects the prediction,
    ``x_post = x_prior + L (y - C x_prior)``.
    """
    A_d = np.atleast_2d(A_d)
    C = np.atleast_2d(C)
    Rm = np.atleast_2d(meas_cov)
    P_prior = solve_dare(A_d.T, C.T, np.atleast_2d(process_cov), Rm)
    L = P_prior @ C.T @ np.linalg.inv(C @ P_prior @ C.T + Rm)
    P_post = (np.eye(A_d.shape[0]) - L @ C) @ P_prior
    return L, P_prior, P_post


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass(frozen=True)
class GainSet:
    omega: float
    dt: float
    A_d: np.ndarray
    B_d: np.ndarray
    K: np.ndarray  # (1, 3) over [c err, dcm err, integral]
    L: np.ndarray  # (2, 2)
    Q: np.ndarray
    R: np.ndarray
    process_cov: np.ndarray
    meas_cov: np.ndarray
    P_lqr: np.ndarray
    P_kf: np.ndarray
    integral_limit: float = 0.5

    def closed_loop_radius(self) -> float:
        Aa, Ba = augment_integral(self.A_d, self.B_d, self.dt)
        return spectral_radius(Aa - Ba @ self.K)

    def axis_controller(self):
        A, B, K, L = self.A_d, self.B_d, self.K, self.L
        return kernels.AxisController(
            A[0, 0], A[0, 1], A[1, 1], B[0, 0], B[1, 0],
            L[0, 0], L[0, 1], L[1, 0], L[1, 1],
            K[0, 0], K[0, 1], K[0, 2], self.dt, self.integral_limit,
        )

    def rows(self):
        """Flat ``(name, i, j, value)`` rows for CSV dumps."""
        out = []
        for name in ("A_d", "B_d", "K", "L", "Q", "R", "P_lqr", "P_kf"):
            M = np.atleast_2d(getattr(self, name))
            for i in range(M.shape[0]):
                for j in range(M.shape[1]):
                    out.append((name, i, j, float(M[i, j])))
        return out


DEFAULT_Q = (10.0, 100.0, 1.0)


@functools.lru_cache(maxsize=32)
def _synthesize(omega, dt, q_diag, r, process_var, meas_var, integral_limit):
    ss = build_state_space(omega)
    A_d, B_d = discretize(ss, dt)
    Aa, Ba = augment_integral(A_d, B_d, dt)
    Q = np.diag(q_diag)
    R = np.array([[r]])
    K, P_lqr = solve_lqr(Aa, Ba, Q, R)
    Qp = process_var * np.eye(2)
    Rm = meas_var * np.eye(2)
    L, P_kf, _ = design_kalman(A_d, np.eye(2), Qp, Rm)
    return GainSet(omega, dt, A_d, B_d, K, L, Q, R, Qp, Rm, P_lqr, P_kf, integral_limit)


def synthesize_gains(
    omega: float,
    dt: float = 0.002,
    q_diag=DEFAULT_Q,
    r: float = 1.0,
    process_var: float = 1e-6,
    meas_var: float = 6.25e-4,
    integral_limit: float = 0.5,
) -> GainSet:
    """Offline gain synthesis; cached, so repeated calls with the same ``omega``/``dt`` are free."""
    return _synthesize(float(omega), float(dt), tuple(float(q) for q in q_diag), float(r),
                       float(process_var), float(meas_var), float(integral_limit))


class LQGController:
    """Two decoupled axis controllers (x, y) sharing one gain set."""

    def __init__(self, gains: GainSet):
        self.gains = gains
        self.axes = (gains.axis_controller(), gains.axis_controller())

    def reset(self, com, dcm) -> None:
        for ax, ctrl in enumerate(self.axes):
            ctrl.reset(float(com[ax]), float(dcm[ax]))

    @property
    def estimate(self):
        """Filtered ``(com, dcm)``."""
        return (np.array([a.c_hat for a in self.axes]), np.array([a.z_hat for a in self.axes]))

    @property
    def integral(self) -> np.ndarray:
        return np.array([a.xi for a in self.axes])

    def step(self, c_meas, dcm_meas, ref, lower=(-np.inf, -np.inf), upper=(np.inf, np.inf)):
        """One control cycle. Returns ``(p_cmd, p_applied)`` where ``p_applied`` is clipped to the box."""
        p_cmd = np.empty(2)
        p_app = np.empty(2)
        for ax, ctrl in enumerate(self.axes):
            p_cmd[ax], p_app[ax] = ctrl.update(
                float(c_meas[ax]), float(dcm_meas[ax]),
                float(ref.com_ref[ax]), float(ref.dcm_ref[ax]), float(ref.zmp_ref[ax]),
                float(lower[ax]), float(upper[ax]),
            )
        return p_cmd, p_app


def control_step(meas, ref, controller: LQGController, polygon=None):
    """Functional wrapper: ``meas = (com, dcm)``; returns ``(p_cmd, p_applied)``."""
    if polygon is None:
        return controller.step(meas[0], meas[1], ref)
    return controller.step(meas[0], meas[1], ref, polygon.lower, polygon.upper)
