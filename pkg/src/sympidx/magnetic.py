"""Twisted geodesic flows on the cotangent bundle of the flat torus R^2 / (2 pi Z)^2.

The metric is e^{2u(q)} (dx^2 + dy^2) and the magnetic field is the 2-form
b(q) dx ^ dy, both given by finite Fourier data. The kinetic energy is
K = e^{-2u} |p|^2 / 2 and the equations of motion are

    q' = dK/dp,    p' = -dK/dq + b(q) J2 q',    J2 = [[0, -1], [1, 0]],

in the mechanics convention; the other convention runs the same curves
backwards. With b > 0 charged particles turn to the left.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.optimize import minimize

from .errors import InvalidParams
from .hamflow import TORUS_BASE, HamSystem, Trajectory
from .orbits import OrbitRecord
from .paths import Convention

AMPLITUDE_CAP = 0.2
MAX_WAVENUMBER = 5
CHECK_GRID = 64

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class FourierSeries:
    """mean + sum of amp * cos(kx x + ky y + phase) over integer wave vectors."""
    modes: tuple[tuple[int, int, float, float], ...] = ()
    mean: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(
            (int(kx), int(ky), float(a), float(ph)) for kx, ky, a, ph in self.modes))
        arr = np.array(self.modes, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "_k", arr[:, :2])
        object.__setattr__(self, "_amp", arr[:, 2])
        object.__setattr__(self, "_phase", arr[:, 3])

    @classmethod
    def from_rows(cls, rows, mean: float = 0.0) -> "FourierSeries":
        for r in rows:
            if len(r) != 4:
                raise InvalidParams("Fourier rows are [kx, ky, amp, phase]")
            if float(r[0]) != int(r[0]) or float(r[1]) != int(r[1]):
                raise InvalidParams("wave numbers must be integers on the 2 pi torus")
        return cls(tuple(tuple(r) for r in rows), float(mean))

    def _arg(self, q):
        return self._k @ np.asarray(q, dtype=float) + self._phase

    def __call__(self, q) -> float:
        return self.mean + float(self._amp @ np.cos(self._arg(q)))

    def grad(self, q) -> np.ndarray:
        return -(self._amp * np.sin(self._arg(q))) @ self._k

    def hess(self, q) -> np.ndarray:
        w = self._amp * np.cos(self._arg(q))
        return -(self._k.T * w) @ self._k

    def on_grid(self, N: int = CHECK_GRID) -> np.ndarray:
        x = np.linspace(0.0, 2 * np.pi, N, endpoint=False)
        X, Y = np.meshgrid(x, x, indexing="ij")
        out = np.full(X.shape, self.mean)
        for (kx, ky), a, ph in zip(self._k, self._amp, self._phase):
            out += a * np.cos(kx * X + ky * Y + ph)
        return out

    @property
    def is_constant(self) -> bool:
        return not np.any(self._amp)

    def rows(self) -> list[list[float]]:
        return [list(m) for m in self.modes]


def _violations(u: FourierSeries, b: FourierSeries) -> list[str]:
    out = []
    for name, s in (("metric", u), ("field", b)):
        if any(abs(kx) > MAX_WAVENUMBER or abs(ky) > MAX_WAVENUMBER for kx, ky, *_ in s.modes):
            out.append(f"{name} Fourier modes need |kx|, |ky| <= {MAX_WAVENUMBER}")
    if any(abs(amp) > AMPLITUDE_CAP for _, _, amp, _ in u.modes):
        out.append(f"metric perturbation amplitude must be <= {AMPLITUDE_CAP}")
    if not np.all(np.isfinite(u.on_grid(8))) or not np.all(np.isfinite(b.on_grid(8))):
        out.append("Fourier data must be finite")
    elif float(np.min(b.on_grid())) <= 0:
        out.append("symplectic magnetic field requires b > 0")
    return out


@dataclass(frozen=True)
class MagneticSystem:
    """Conformal metric exponent u and magnetic density b on the 2-torus."""
    u: FourierSeries = FourierSeries()
    b: FourierSeries = FourierSeries(mean=1.0)

    def __post_init__(self):
        bad = _violations(self.u, self.b)
        if bad:
            raise InvalidParams("; ".join(bad))

    @classmethod
    def flat(cls, B: float = 1.0) -> "MagneticSystem":
        return cls(FourierSeries(), FourierSeries(mean=float(B)))

    @classmethod
    def conformal(cls, modes, B: float = 1.0) -> "MagneticSystem":
        return cls(FourierSeries.from_rows(modes), FourierSeries(mean=float(B)))

    @staticmethod
    def validate_config(cfg: dict) -> list[str]:
        try:
            u, b = _parse(cfg)
        except (InvalidParams, KeyError, TypeError, ValueError) as exc:
            return [str(exc)]
        return _violations(u, b)

    @classmethod
    def from_config(cls, cfg: dict) -> "MagneticSystem":
        u, b = _parse(cfg)
        return cls(u, b)

    def to_config(self) -> dict:
        metric = {"type": "flat"} if not self.u.modes else {"type": "conformal", "fourier": self.u.rows()}
        if self.b.modes:
            fld = {"type": "fourier", "value": self.b.mean, "fourier": self.b.rows()}
        else:
            fld = {"type": "constant", "value": self.b.mean}
        return {"metric": metric, "field": fld}

    @property
    def is_flat(self) -> bool:
        return self.u.is_constant and self.u.mean == 0.0

    def kinetic(self, z) -> float:
        return 0.5 * math.exp(-2 * self.u(z[:2])) * float(z[2] ** 2 + z[3] ** 2)

    def gyrofrequency(self, q) -> float:
        """b e^{-2u}: the turning rate of slow particles at q."""
        return self.b(q) * math.exp(-2 * self.u(q))

    def hamiltonian(self) -> HamSystem:
        return equations_of_motion(self)

    def guiding_center(self) -> np.ndarray:
        """A maximum of the gyrofrequency; small orbits centred there close up."""
        if self.u.is_constant and self.b.is_constant:
            return np.zeros(2)
        x = np.linspace(0.0, 2 * np.pi, CHECK_GRID, endpoint=False)
        grid = self.b.on_grid() * np.exp(-2 * self.u.on_grid())
        i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)

        def neg(q):
            return -self.gyrofrequency(q)

        def neg_grad(q):
            w = self.gyrofrequency(q)
            return -(self.b.grad(q) * math.exp(-2 * self.u(q)) - 2 * w * self.u.grad(q))

        res = minimize(neg, np.array([x[i], x[j]]), jac=neg_grad, method="BFGS", options={"gtol": 1e-13})
        return np.asarray(res.x)

    def seed_orbit(self, r: float, convention: Convention = Convention.MECHANICS,
                   rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, float]:
        """Local magnetic circle on the level K = r^2 around ``guiding_center``.

        Returns (z0, T0) with K(z0) = r^2 exactly; exact for flat data.
        """
        if r <= 0:
            raise ValueError("r must be positive")
        c = self.guiding_center()
        omega = self.gyrofrequency(c)
        speed = math.sqrt(2.0) * r * math.exp(-self.u(c))
        q0 = c - np.array([0.0, speed / omega])
        # |p| = sqrt(2) r e^{u(q0)} puts the point exactly on the level
        pn = math.sqrt(2.0) * r * math.exp(self.u(q0))
        p0 = -Convention(convention).sign * np.array([pn, 0.0])
        return np.concatenate([q0, p0]), 2 * math.pi / omega


def _parse(cfg: dict) -> tuple[FourierSeries, FourierSeries]:
    metric = cfg.get("metric", {"type": "flat"})
    mtype = metric.get("type", "flat")
    if mtype == "flat":
        u = FourierSeries()
    elif mtype == "conformal":
        u = FourierSeries.from_rows(metric.get("fourier", []), metric.get("mean", 0.0))
    else:
        raise InvalidParams(f"unknown metric type {mtype!r}")
    fld = cfg.get("field", {"type": "constant", "value": 1.0})
    ftype = fld.get("type", "constant")
    if ftype == "constant":
        b = FourierSeries(mean=float(fld["value"]))
    elif ftype == "fourier":
        b = FourierSeries.from_rows(fld.get("fourier", []), fld.get("value", 0.0))
    else:
        raise InvalidParams(f"unknown field type {ftype!r}")
    return u, b


def equations_of_motion(sys: MagneticSystem) -> HamSystem:
    """HamSystem for the twisted flow, Poisson tensor P = [[0, -I], [I, -b J2]].

    The field is sign * P grad K; with the mechanics sign (-1) this is
    q' = e^{-2u} p, p' = e^{-2u} |p|^2 grad u + b J2 q'. The Darboux frame
    F = [[I, 0], [b J2 / 2, I]] satisfies F J F^T = P.
    """
    u, b = sys.u, sys.b
    flat_metric = u.is_constant
    const_b = b.is_constant
    eye2 = np.eye(2)
    zero2 = np.zeros((2, 2))

    def parts(z):
        q, p = z[:2], z[2:]
        e = math.exp(-2 * u(q)) if not flat_metric else math.exp(-2 * u.mean)
        gu = u.grad(q) if not flat_metric else np.zeros(2)
        return q, p, e, gu

    def H(z):
        q, p, e, _ = parts(z)
        return 0.5 * e * float(p @ p)

    def grad(z):
        q, p, e, gu = parts(z)
        pp = float(p @ p)
        return np.concatenate([-e * pp * gu, e * p])

    def hess(z):
        q, p, e, gu = parts(z)
        pp = float(p @ p)
        Hu = u.hess(q) if not flat_metric else zero2
        Kqq = e * pp * (2 * np.outer(gu, gu) - Hu)
        Kqp = -2 * e * np.outer(gu, p)
        return np.block([[Kqq, Kqp], [Kqp.T, e * eye2]])

    def poisson(z):
        bq = b(z[:2]) if not const_b else b.mean
        return np.block([[zero2, -eye2], [eye2, -bq * J2]])

    def field(z):
        g = grad(z)
        bq = b(z[:2]) if not const_b else b.mean
        Kq, Kp = g[:2], g[2:]
        return np.concatenate([-Kp, Kq - bq * (J2 @ Kp)])

    def jacobian(z):
        M = poisson(z) @ hess(z)
        if not const_b:
            Kp = grad(z)[2:]
            M[2:, :2] -= np.outer(J2 @ Kp, b.grad(z[:2]))
        return M

    def frame(z):
        bq = b(z[:2]) if not const_b else b.mean
        return np.block([[eye2, zero2], [0.5 * bq * J2, eye2]])

    def frame_rate(z, zdot):
        if const_b:
            return np.zeros((4, 4))
        db = float(b.grad(z[:2]) @ zdot[:2])
        return np.block([[zero2, zero2], [0.5 * db * J2, zero2]])

    return HamSystem(4, H, grad, hess, TORUS_BASE, poisson, frame, frame_rate, field, jacobian,
                     "magnetic")


@dataclass(frozen=True)
class MagneticOracle:
    B: float
    r: float

    def __post_init__(self):
        if not (self.B > 0 and self.r > 0):
            raise InvalidParams("oracle needs B > 0 and r > 0")


def oracle_orbit(oracle: MagneticOracle, convention: Convention = Convention.MECHANICS,
                 center: Sequence[float] = (0.0, 0.0)) -> OrbitRecord:
    """Closed-form magnetic circle of the flat torus with constant field.

    Speed v = r sqrt(2), radius v / B, period 2 pi / B for every r.
    """
    v = math.sqrt(2.0) * oracle.r
    c = np.asarray(center, dtype=float)
    q0 = c - np.array([0.0, v / oracle.B])
    p0 = -Convention(convention).sign * np.array([v, 0.0])
    return OrbitRecord(np.concatenate([q0, p0]), 2 * math.pi / oracle.B, oracle.r ** 2, 0.0, True,
                       Convention(convention), (0, 0), None, 0)


def oracle_radius(oracle: MagneticOracle) -> float:
    return math.sqrt(2.0) * oracle.r / oracle.B


def sample_level(sys: MagneticSystem, r: float, count: int, seed=None) -> list[np.ndarray]:
    """``count`` phase points on K = r^2, positions uniform on the torus and
    momentum directions uniform on the circle."""
    if r <= 0:
        raise ValueError("r must be positive")
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        q = rng.uniform(0.0, 2 * np.pi, 2)
        th = rng.uniform(0.0, 2 * np.pi)
        p = math.sqrt(2.0) * r * math.exp(sys.u(q)) * np.array([math.cos(th), math.sin(th)])
        z = np.concatenate([q, p])
        # one Newton correction of the momentum scale onto the level
        z[2:] *= math.sqrt(r * r / sys.kinetic(z))
        out.append(z)
    return out


def arc_length(sys: MagneticSystem, traj: Trajectory) -> float:
    """Riemannian length of the projected curve, trapezoid rule on e^{u} |q'|.

    Along the flow |q'|_g = sqrt(2K), so this is sqrt(2) r T up to quadrature.
    """
    u = np.array([sys.u(q) for q in traj.states[:, :2]])
    # e^{u} |q'| with q' = e^{-2u} p
    speed = np.exp(-u) * np.linalg.norm(traj.states[:, 2:], axis=1)
    return float(integrate.trapezoid(speed, traj.times))


def length_bound(sys: MagneticSystem, r: float, T: float) -> float:
    """sqrt(2) max(e^u) r T."""
    return math.sqrt(2.0) * float(np.exp(sys.u.on_grid()).max()) * r * abs(T)
