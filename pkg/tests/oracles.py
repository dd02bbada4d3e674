"""Closed-form reference values, computed without the package's numerics."""
import math

import numpy as np


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def exp_rotation_flow(omega, t):
    """e^{omega t J} on R^2 with J = [[0, -1], [1, 0]]."""
    return rot(omega * t)


def cz_elliptic(omega_T):
    """Index of t -> rot(omega t) on [0, T] (omega T not in 2 pi Z).

    The start contributes sign(omega) and every completed turn 2 sign(omega).
    """
    x = omega_T / (2 * math.pi)
    if x > 0:
        return 2 * math.floor(x) + 1
    return -(2 * math.floor(-x) + 1)


def delta_scalar_flow(s, n, T):
    """Polar winding of e^{s J t} on R^{2n}: det_C = e^{i n s t}."""
    return n * s * T / math.pi


def magnetic_circle(B, r, t, q_center=(0.0, 0.0)):
    """Flat torus, constant field, mechanics convention: q' = p, p' = B J2 p."""
    v = math.sqrt(2.0) * r
    R = v / B
    ang = B * t
    q = (q_center[0] + R * math.sin(ang), q_center[1] - R * math.cos(ang))
    p = (v * math.cos(ang), v * math.sin(ang))
    return np.array([*q, *p])


def scheme_m1q1():
    """The m = q = 1, r^2 = 1, eps0 = 0.1, unit Hessian example in closed form."""
    pi = math.pi
    rho3m = 0.2 / pi
    rho1m = rho3m / 3
    rho1p = 0.3 / pi
    rho3p = rho1p + 2 * rho1m
    C = 8 * pi ** 2 * rho3p
    return {
        "rho3m": rho3m, "rho1p": rho1p, "rho3p": rho3p,
        "C": C,
        "a": C + 2 * pi ** 2 * rho1m,
        "b": C + 6 * pi ** 2 * rho3p,
        "Ax1m": C + 4 * pi ** 2 * rho1m,
        "Ay1m": 4 * pi ** 2 * 2 * rho1m,
        "k": math.floor(52 * pi ** 2),
    }


def _souriau(Phi):
    """(X + iY)(X - iY)^{-1} for the graph of Phi in (R^2n x R^2n, -w + w),
    written in standard coordinates Q = (x_q, y_q), P = (-x_p, y_p)."""
    n = Phi.shape[0] // 2
    eye = np.eye(2 * n)
    X = np.vstack([eye[:n], Phi[:n]])
    Y = np.vstack([-eye[n:], Phi[n:]])
    return (X + 1j * Y) @ np.linalg.inv(X - 1j * Y)


def cz_souriau(frames):
    """Conley-Zehnder index without crossings.

    With M(t) = W(Phi(t)) W(I)^{-1}, every eigenvalue angle starts at 0 and
    mu = n + (A(T) - sum_j phi_j(T)) / 2 pi, where A is the continuous
    argument of det M and phi_j in [0, 2 pi) the eigenvalue angles at T.
    The frames must be dense enough that arg det M moves less than pi per step.
    """
    n = frames.shape[-1] // 2
    W0inv = np.linalg.inv(_souriau(np.eye(2 * n)))
    dets = np.array([np.linalg.det(_souriau(F) @ W0inv) for F in frames])
    steps = np.angle(dets[1:] / dets[:-1])
    if np.max(np.abs(steps)) > 1.0:
        raise ValueError("frames too coarse for the Souriau oracle")
    A = float(np.sum(steps))
    phi = np.mod(np.angle(np.linalg.eigvals(_souriau(frames[-1]) @ W0inv)), 2 * math.pi)
    val = n + (A - float(np.sum(phi))) / (2 * math.pi)
    return int(round(val)), val
