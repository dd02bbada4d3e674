"""Nonlinear Hamiltonian flows, their linearization along trajectories, and
reparametrization of the Hamiltonian by a function of itself.

A system may carry a non-standard Poisson tensor P(z) (twisted cotangent
bundles). The vector field is then sign * P(z) grad H(z). Variational frames
are always reported in a Darboux frame F(z) with F J F^T = P, so that they are
honest paths in Sp(2n) and can be fed to the index routines.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .errors import NonPeriodicInput, NoConvergence, StepGuardViolated, StepTooLarge
from .linalg import check_symplectic, standard_J
from .paths import MAX_STEPS, STEP_GUARD, Convention, SympPath, delta_rho, delta_tilde

PLANE = "plane"
TORUS_BASE = "torus_base"

GRAD_STEP = 1e-6
HESS_STEP = 1e-5
HESS_STEP_H = 1e-3


def _yoshida(order: int) -> tuple[float, ...]:
    """Substep fractions of the symmetric triple-jump composition."""
    if order == 2:
        return (1.0,)
    if order not in (4, 6):
        raise ValueError("order must be 2, 4 or 6")
    coeffs = (1.0,)
    for p in range(2, order, 2):
        w1 = 1.0 / (2.0 - 2.0 ** (1.0 / (p + 1)))
        w0 = 1.0 - 2.0 * w1
        coeffs = tuple(w * c for w in (w1, w0, w1) for c in coeffs)
    return coeffs


@dataclass(frozen=True)
class HamSystem:
    """Autonomous Hamiltonian system on a 2n-dimensional chart.

    Parameters
    ----------
    dim : int
        Phase-space dimension 2n, coordinates (q_1..q_n, p_1..p_n).
    H : callable
        Energy z -> float.
    grad, hess : callable, optional
        Closed forms; central differences are used when omitted.
    topology : {"plane", "torus_base"}
        On ``torus_base`` positions are periodic mod 2 pi.
    poisson : callable or ndarray, optional
        Poisson tensor P(z); the standard J when omitted.
    frame, frame_rate : callable, optional
        Darboux frame F(z) with F J F^T = P(z) and its time derivative
        (z, zdot) -> dF/dt. Required whenever ``poisson`` is given.
    field, jacobian : callable, optional
        Fast closed forms of P grad H and of its derivative.
    """
    dim: int
    H: Callable[[np.ndarray], float]
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    topology: str = PLANE
    poisson: Optional[object] = None
    frame: Optional[Callable] = None
    frame_rate: Optional[Callable] = None
    field: Optional[Callable] = None
    jacobian: Optional[Callable] = None
    label: str = ""
    _J: np.ndarray = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 2 or self.dim % 2:
            raise ValueError("dim must be even and >= 2")
        if self.topology not in (PLANE, TORUS_BASE):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.poisson is not None and self.frame is None:
            raise ValueError("a Poisson tensor needs a Darboux frame")
        object.__setattr__(self, "_J", standard_J(self.dim // 2))

    @property
    def n(self) -> int:
        return self.dim // 2

    def energy(self, z) -> float:
        return float(self.H(np.asarray(z, dtype=float)))

    def gradient(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(z), dtype=float)
        g = np.empty(self.dim)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = GRAD_STEP
            g[k] = (self.H(z + e) - self.H(z - e)) / (2 * GRAD_STEP)
        return g

    def hessian(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.hess is not None:
            M = np.asarray(self.hess(z), dtype=float)
            return 0.5 * (M + M.T)

        eye = np.eye(self.dim)

        def fd_grad(h):
            M = np.empty((self.dim, self.dim))
            for k in range(self.dim):
                M[:, k] = (self.gradient(z + h * eye[k]) - self.gradient(z - h * eye[k])) / (2 * h)
            return M

        def fd_energy(h):
            # second differences of H itself; nesting two first differences would
            # amplify roundoff by 1 / (GRAD_STEP * h)
            M = np.empty((self.dim, self.dim))
            H0 = self.energy(z)
            for j in range(self.dim):
                for k in range(j, self.dim):
                    if j == k:
                        M[j, j] = (self.energy(z + h * eye[j]) - 2 * H0 + self.energy(z - h * eye[j])) / h ** 2
                    else:
                        a, b = h * eye[j], h * eye[k]
                        M[j, k] = M[k, j] = (self.energy(z + a + b) - self.energy(z + a - b)
                                             - self.energy(z - a + b) + self.energy(z - a - b)) / (4 * h * h)
            return M

        fd, h = (fd_grad, HESS_STEP) if self.grad is not None else (fd_energy, HESS_STEP_H)
        # one Richardson step on the central difference
        M = (4 * fd(h) - fd(2 * h)) / 3
        return 0.5 * (M + M.T)

    def poisson_at(self, z) -> np.ndarray:
        if self.poisson is None:
            return self._J
        if callable(self.poisson):
            return np.asarray(self.poisson(z), dtype=float)
        return np.asarray(self.poisson, dtype=float)

    def vector_field(self, z) -> np.ndarray:
        """P(z) grad H(z), before the convention sign."""
        if self.field is not None:
            return self.field(z)
        return self.poisson_at(z) @ self.gradient(z)

    def field_jacobian(self, z) -> np.ndarray:
        if self.jacobian is not None:
            return self.jacobian(z)
        if self.poisson is None or not callable(self.poisson):
            return self.poisson_at(z) @ self.hessian(z)
        M = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = HESS_STEP
            M[:, k] = (self.vector_field(z + e) - self.vector_field(z - e)) / (2 * HESS_STEP)
        return M

    def displacement(self, z1, z0) -> np.ndarray:
        """z1 - z0, with position differences reduced mod 2 pi on torus_base."""
        d = np.asarray(z1, dtype=float) - np.asarray(z0, dtype=float)
        if self.topology == TORUS_BASE:
            d[:self.n] = (d[:self.n] + np.pi) % (2 * np.pi) - np.pi
        return d

    def check_consistency(self, probes: np.ndarray, rtol: float = 1e-5) -> float:
        """Worst relative mismatch between grad H and directional differences of H."""
        worst = 0.0
        rng = np.random.default_rng(0)
        for z in np.atleast_2d(probes):
            v = rng.normal(size=self.dim)
            v /= np.linalg.norm(v)
            dd = (self.energy(z + GRAD_STEP * v) - self.energy(z - GRAD_STEP * v)) / (2 * GRAD_STEP)
            g = float(self.gradient(z) @ v)
            worst = max(worst, abs(dd - g) / max(1.0, abs(g)))
        if worst > rtol:
            raise ValueError(f"gradient inconsistent with H (relative error {worst:.2e})")
        return worst

    def compose(self, f: "Reparam") -> "HamSystem":
        """The system f o H on the same phase space."""
        def H(z):
            return f.f(self.energy(z))

        def grad(z):
            return f.df(self.energy(z)) * self.gradient(z)

        def hess(z):
            g = self.gradient(z)
            K = self.energy(z)
            return f.df(K) * self.hessian(z) + f.d2f(K) * np.outer(g, g)

        def vf(z):
            return f.df(self.energy(z)) * self.vector_field(z)

        def jac(z):
            K = self.energy(z)
            return f.df(K) * self.field_jacobian(z) + f.d2f(K) * np.outer(self.vector_field(z), self.gradient(z))

        return HamSystem(self.dim, H, grad, hess, self.topology, self.poisson, self.frame,
                         self.frame_rate, vf, jac, f"{f.name}({self.label})")

    @classmethod
    def quadratic(cls, S: np.ndarray, label: str = "quadratic") -> "HamSystem":
        S = np.array(S, dtype=float)
        S = 0.5 * (S + S.T)
        return cls(S.shape[0], lambda z: 0.5 * z @ S @ z, lambda z: S @ z, lambda z: S, label=label)

    @classmethod
    def pendulum(cls) -> "HamSystem":
        """H = p^2/2 + cos q on the cylinder (q periodic)."""
        return cls(2, lambda z: 0.5 * z[1] ** 2 + math.cos(z[0]),
                   lambda z: np.array([-math.sin(z[0]), z[1]]),
                   lambda z: np.array([[-math.cos(z[0]), 0.0], [0.0, 1.0]]),
                   topology=TORUS_BASE, label="pendulum")


@dataclass(frozen=True)
class Reparam:
    """Smooth increasing function f with its first two derivatives."""
    f: Callable[[float], float]
    df: Callable[[float], float]
    d2f: Callable[[float], float]
    name: str = "f"

    @classmethod
    def identity(cls) -> "Reparam":
        return cls(lambda x: x, lambda x: 1.0, lambda x: 0.0, "id")

    @classmethod
    def scale(cls, c: float) -> "Reparam":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return cls(lambda x: c * x, lambda x: c, lambda x: 0.0, f"{c:g}x")

    @classmethod
    def quadratic(cls, c: float = 1.0) -> "Reparam":
        """f(x) = x + c x^2 (increasing where 1 + 2cx > 0)."""
        return cls(lambda x: x + c * x * x, lambda x: 1.0 + 2 * c * x, lambda x: 2 * c, f"x+{c:g}x^2")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray
    energy_drift: float
    drift_bound: float
    convention: Convention
    order: int = 2
    tangent: Optional[np.ndarray] = dc_field(default=None, repr=False)

    @property
    def period(self) -> float:
        return float(self.times[-1] - self.times[0])

    @property
    def within_bound(self) -> bool:
        return self.energy_drift <= self.drift_bound

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.states.shape[1]
        w.writerow(["t"] + [f"z_{k + 1}" for k in range(d)] + ["H"])
        for t, z, e in zip(self.times, self.states, self.energies):
            w.writerow([format(v, ".17g") for v in (t, *z, e)])
        return buf.getvalue()


def _midpoint_step(system, z, h, sgn, tol, max_iter):
    m = z + 0.5 * h * sgn * system.vector_field(z)
    for _ in range(max_iter):
        m_new = z + 0.5 * h * sgn * system.vector_field(m)
        err = np.max(np.abs(m_new - m))
        m = m_new
        if err <= tol * (1.0 + np.max(np.abs(m))):
            return m
        if not np.all(np.isfinite(m)):
            break
    raise NoConvergence(f"implicit midpoint iteration did not converge (last update {err:.2e})")


def flow(system: HamSystem, z0, T: float, steps: int, convention: Convention = Convention.JGRAD,
         order: int = 4, tangent: bool = False, tol: float = 1e-14, max_iter: int = 100) -> Trajectory:
    """Integrate z' = sign P(z) grad H(z) over [0, T] by implicit midpoint.

    Parameters
    ----------
    order : {2, 4, 6}
        2 is plain implicit midpoint; 4 (default) and 6 compose it by symmetric
        triple jumps, which keeps the scheme symmetric (and symplectic for
        constant P) while pushing the energy error down to O(h^order).
    tangent : bool
        Also accumulate the exact Jacobian of the discrete time-T map, the
        product of the Cayley factors (I - hA/2)^-1 (I + hA/2).
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    convention = Convention(convention)
    sgn = convention.sign
    z = np.array(z0, dtype=float)
    if z.shape != (system.dim,):
        raise ValueError(f"z0 must have length {system.dim}")
    h = float(T) / steps
    L = float(np.linalg.norm(system.field_jacobian(z), 2))
    if abs(h) * L >= 1.0:
        raise StepTooLarge(f"step {abs(h):.3g} times Lipschitz estimate {L:.3g} is >= 1")
    subs = _yoshida(order)
    eye = np.eye(system.dim)
    states = np.empty((steps + 1, system.dim))
    states[0] = z
    D = eye.copy() if tangent else None
    for i in range(steps):
        for c in subs:
            hc = c * h
            m = _midpoint_step(system, z, hc, sgn, tol, max_iter)
            if tangent:
                A = 0.5 * hc * sgn * system.field_jacobian(m)
                D = np.linalg.solve(eye - A, (eye + A) @ D)
            z = 2.0 * m - z
        states[i + 1] = z
    times = np.linspace(0.0, float(T), steps + 1)
    energies = np.array([system.energy(s) for s in states])
    drift = float(np.max(np.abs(energies - energies[0])))
    bound = 1e-8 * (1 + abs(energies[0])) * abs(float(T))
    return Trajectory(times, states, energies, drift, bound, convention, order, D)


def _std_generator(system: HamSystem, z: np.ndarray, zdot: np.ndarray, sgn: float) -> np.ndarray:
    """Linearized field in the Darboux frame, projected onto Hamiltonian matrices."""
    A = sgn * system.field_jacobian(z)
    if system.frame is not None:
        F = system.frame(z)
        Fdot = system.frame_rate(z, zdot) if system.frame_rate is not None else 0.0
        A = np.linalg.solve(F, A @ F - Fdot)
    J = system._J
    S = -J @ A
    return J @ (0.5 * (S + S.T))


def variational_flow(system: HamSystem, traj: Trajectory,
                     convention: Optional[Convention] = None) -> SympPath:
    """Linearized flow along a trajectory as a path in Sp(2n), Phi(0) = I.

    Each grid interval uses the exponential of the generator at the chord
    midpoint. Intervals whose step would break the sampling guard are split,
    with the trajectory interpolated linearly inside them.
    """
    sgn = Convention(convention if convention is not None else traj.convention).sign
    dim = system.dim
    eye = np.eye(dim)
    times = [traj.times[0]]
    frames = [eye]
    Phi = eye
    for i in range(len(traj.times) - 1):
        t0, t1 = traj.times[i], traj.times[i + 1]
        z0, z1 = traj.states[i], traj.states[i + 1]
        h = t1 - t0
        zdot = (z1 - z0) / h
        pieces = 1
        while True:
            s = (np.arange(pieces) + 0.5) / pieces
            Es = [expm((h / pieces) * _std_generator(system, z0 + si * (z1 - z0), zdot, sgn)) for si in s]
            if max(np.max(np.abs(E - eye)) for E in Es) < STEP_GUARD:
                break
            pieces *= 2
            if pieces * (len(traj.times) - 1) > MAX_STEPS:
                raise StepGuardViolated("variational step guard violated after refinement")
        for k, E in enumerate(Es):
            Phi = E @ Phi
            times.append(t0 + h * (k + 1) / pieces)
            frames.append(Phi)
    frames = check_symplectic(np.array(frames), tol=1e-7)
    return SympPath(np.array(times), frames, "variational", validate=False)


def closure_residual(system: HamSystem, traj: Trajectory) -> float:
    return float(np.linalg.norm(system.displacement(traj.states[-1], traj.states[0])))


def delta_under_reparametrization(system: HamSystem, f: Reparam, orbit: Trajectory,
                                  method: str = "tilde") -> tuple[float, float]:
    """Winding of the linearized flow of K and of f o K around the same orbit.

    ``orbit`` is one period of the K-flow. The f o K flow traverses the same
    loop with period T / f'(K). ``method="tilde"`` reports the polar winding;
    ``method="rho"`` tracks the eigenvalue map, which is the quantity that is
    exactly invariant (the polar winding also sees the shear that a nonlinear
    f adds to the monodromy).
    """
    if method not in ("tilde", "rho"):
        raise ValueError("method must be 'tilde' or 'rho'")
    res = closure_residual(system, orbit)
    if res >= 1e-6:
        raise NonPeriodicInput(f"orbit closure residual {res:.2e} >= 1e-6")
    K0 = system.energy(orbit.states[0])
    slope = f.df(K0)
    if slope <= 0:
        raise ValueError("f must be increasing on the orbit's level")
    measure = delta_tilde if method == "tilde" else delta_rho
    steps = len(orbit.times) - 1
    d_K = measure(variational_flow(system, orbit)).delta
    fsys = system.compose(f)
    forbit = flow(fsys, orbit.states[0], orbit.period / slope, steps, orbit.convention, orbit.order)
    d_H = measure(variational_flow(fsys, forbit)).delta
    return d_K, d_H
