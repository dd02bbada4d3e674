"""Sampled symplectic paths, linear Hamiltonian flows and winding invariants.

Normalization: if rho(Phi(t)) = exp(i theta(t)) then the invariant is
(theta(b) - theta(a)) / pi, so one full turn of the unitary determinant counts 2.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import SamplingTooCoarse, StepGuardViolated
from .linalg import (check_symplectic, half_dim, renormalize, rho_eigen,
                     rho_tilde, standard_J, symp_inverse)

STEP_GUARD = 0.5
MAX_STEPS = 2 ** 16
WINDING_GUARD = math.pi / 4


class Convention(str, enum.Enum):
    """Sign of the Hamiltonian vector field.

    JGRAD: z' = J grad H, so positive definite quadratic flows wind positively.
    MECHANICS: z' = -J grad H, i.e. q' = dH/dp, p' = -dH/dq; positive definite
    quadratic flows wind negatively.
    """
    JGRAD = "jgrad"
    MECHANICS = "mechanics"

    @property
    def sign(self) -> float:
        return 1.0 if self is Convention.JGRAD else -1.0


@dataclass(frozen=True)
class SympPath:
    times: np.ndarray
    frames: np.ndarray
    label: str = ""
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        F = np.asarray(self.frames, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "frames", F)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a path needs at least two samples")
        if F.shape[0] != len(t) or F.ndim != 3:
            raise ValueError("frames must have shape (N+1, 2n, 2n)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.validate:
            check_symplectic(F, tol=1e-8)
            g = self.max_step()
            if g >= STEP_GUARD:
                raise SamplingTooCoarse(f"|Phi_(i+1) Phi_i^-1 - I| reaches {g:.3f}")

    @property
    def dim(self) -> int:
        return self.frames.shape[-1]

    @property
    def n(self) -> int:
        return self.dim // 2

    def __len__(self):
        return len(self.times)

    def steps(self) -> np.ndarray:
        """Right-invariant increments Phi_(i+1) Phi_i^-1."""
        return self.frames[1:] @ symp_inverse(self.frames[:-1])

    def max_step(self) -> float:
        E = self.steps() - np.eye(self.dim)
        return float(np.max(np.abs(E)))

    def restrict(self, i0: int, i1: int) -> "SympPath":
        return SympPath(self.times[i0:i1 + 1], self.frames[i0:i1 + 1], self.label, validate=False)

    def reversed(self) -> "SympPath":
        """Same frames traversed backwards, times reflected onto the same interval."""
        t = self.times[0] + self.times[-1] - self.times[::-1]
        return SympPath(t, self.frames[::-1], self.label, validate=False)

    def inverse(self) -> "SympPath":
        return SympPath(self.times, symp_inverse(self.frames), self.label, validate=False)

    def conjugate(self, B: np.ndarray) -> "SympPath":
        Binv = np.linalg.inv(B)
        return SympPath(self.times, Binv @ self.frames @ B, self.label, validate=False)

    def pointwise(self, other: "SympPath") -> "SympPath":
        """(self * other)(t) = self(t) other(t) on a shared sample grid.

        Products of large frames have large increments even on fine grids, so
        the step guard is skipped; delta_tilde still rejects winding jumps.
        """
        check_symplectic(self.frames @ other.frames, tol=1e-8)
        return SympPath(self.times, self.frames @ other.frames, self.label, validate=False)

    def left(self, A: np.ndarray) -> "SympPath":
        return SympPath(self.times, A @ self.frames, self.label, validate=False)

    def to_json(self) -> str:
        rows = [{"t": float(t), "frame": F.tolist()} for t, F in zip(self.times, self.frames)]
        return json.dumps(rows)

    @classmethod
    def from_json(cls, text: str, label: str = "") -> "SympPath":
        rows = json.loads(text)
        times = [r["t"] for r in rows]
        frames = []
        for r in rows:
            F = np.asarray(r["frame"], dtype=float)
            if F.ndim == 1:
                d = math.isqrt(F.size)
                F = F.reshape(d, d)
            frames.append(F)
        return cls(np.array(times), np.array(frames), label)


@dataclass(frozen=True)
class QuadHamiltonian:
    """Quadratic Hamiltonian H_t(X) = <S(t) X, X> / 2 on R^{2n}."""
    dim: int
    S: Callable[[float], np.ndarray]
    convention: Convention = Convention.JGRAD

    def __call__(self, t: float) -> np.ndarray:
        M = np.asarray(self.S(t), dtype=float)
        if np.max(np.abs(M - M.T)) > 1e-10:
            raise ValueError(f"S({t}) is not symmetric")
        return 0.5 * (M + M.T)

    @classmethod
    def constant(cls, S: np.ndarray, convention: Convention = Convention.JGRAD) -> "QuadHamiltonian":
        S = np.array(S, dtype=float)
        return cls(S.shape[0], lambda t: S, convention)

    @classmethod
    def sampled(cls, times: Sequence[float], mats: Sequence[np.ndarray],
                convention: Convention = Convention.JGRAD) -> "QuadHamiltonian":
        times = np.asarray(times, dtype=float)
        mats = np.asarray(mats, dtype=float)

        def S(t):
            i = int(np.clip(np.searchsorted(times, t) - 1, 0, len(times) - 2))
            w = (t - times[i]) / (times[i + 1] - times[i])
            return (1 - w) * mats[i] + w * mats[i + 1]

        return cls(mats.shape[1], S, convention)

    def shifted(self, dS: Callable[[float], np.ndarray]) -> "QuadHamiltonian":
        return QuadHamiltonian(self.dim, lambda t: self(t) + np.asarray(dS(t)), self.convention)


_GAUSS = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def linear_flow(H: QuadHamiltonian, t_span: tuple[float, float], steps: int = 200) -> SympPath:
    """Integrate Phi' = sign J S(t) Phi from Phi(t0) = I.

    Fourth-order Magnus steps: each step is the exponential of a Hamiltonian
    matrix, so every frame is symplectic up to roundoff (and exact for
    constant S). The sample count doubles until the step guard holds and
    rho_tilde turns by less than pi/4 per sample.
    """
    t0, t1 = map(float, t_span)
    n = H.dim // 2
    J = standard_J(n)
    sgn = H.convention.sign
    while True:
        times = np.linspace(t0, t1, steps + 1)
        h = times[1] - times[0]
        A1 = np.array([sgn * J @ H(t + _GAUSS[0] * h) for t in times[:-1]])
        A2 = np.array([sgn * J @ H(t + _GAUSS[1] * h) for t in times[:-1]])
        Omega = 0.5 * h * (A1 + A2) + (math.sqrt(3) / 12) * h * h * (A2 @ A1 - A1 @ A2)
        E = expm(Omega)
        if np.max(np.abs(E - np.eye(H.dim))) < STEP_GUARD:
            frames = np.empty((steps + 1, H.dim, H.dim))
            frames[0] = np.eye(H.dim)
            for i in range(steps):
                frames[i + 1] = E[i] @ frames[i]
                if (i + 1) % 64 == 0:
                    frames[i + 1] = renormalize(frames[i + 1])
            frames = check_symplectic(renormalize(frames), tol=1e-8)
            # large hyperbolic frames can turn their polar part quickly; keep its winding resolved
            rt = rho_tilde(frames, check=False)
            if np.max(np.abs(np.angle(rt[1:] / rt[:-1]))) < WINDING_GUARD:
                break
        steps *= 2
        if steps > MAX_STEPS:
            raise StepGuardViolated(f"step guard still violated at {MAX_STEPS} steps")
    return SympPath(times, frames, "linear_flow", validate=False)


@dataclass(frozen=True)
class DeltaReport:
    delta: float
    winding_trace: np.ndarray
    method: str = "polar"
    tail: float | None = None

    def __float__(self):
        return self.delta


def _unwrap(values: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    ang = np.angle(values)
    inc = np.angle(values[1:] / values[:-1])
    if inc.size and np.max(np.abs(inc)) >= np.pi / 2:
        i = int(np.argmax(np.abs(inc)))
        raise SamplingTooCoarse(f"{what} jumps by {inc[i]:.3f} rad between samples {i} and {i + 1}")
    return ang[0] + np.concatenate([[0.0], np.cumsum(inc)]), inc


def delta_tilde(path: SympPath) -> DeltaReport:
    """Swept angle of rho_tilde along the path, divided by pi."""
    vals = rho_tilde(path.frames, check=False)
    trace, inc = _unwrap(np.atleast_1d(vals), "rho_tilde")
    return DeltaReport(math.fsum(inc) / math.pi, trace, "polar")


def delta_rho(path: SympPath, merge_tol: float = 1e-5, real_tol: float = 1e-4) -> DeltaReport:
    """Swept angle of the eigenvalue map rho (tracking mode), divided by pi."""
    vals = np.array([rho_eigen(F, strict=False, merge_tol=merge_tol, real_tol=real_tol)
                     for F in path.frames])
    trace, inc = _unwrap(vals, "rho")
    return DeltaReport(math.fsum(inc) / math.pi, trace, "eigen")


def iterate_path(path: SympPath, k: int) -> SympPath:
    """k-fold iterate t -> Phi(t) M^j on consecutive copies (M = Phi(T)).

    Right multiplication leaves every increment Phi_(i+1) Phi_i^-1 unchanged,
    so the iterate inherits the step guard of the base path.
    """
    if not np.allclose(path.frames[0], np.eye(path.dim), atol=1e-9):
        raise ValueError("iterates need a path starting at the identity")
    T = path.times[-1] - path.times[0]
    M = path.frames[-1]
    Mj = np.eye(path.dim)
    times, frames = [path.times], [path.frames]
    for j in range(1, k):
        Mj = renormalize(Mj @ M)
        times.append(path.times[1:] + j * T)
        frames.append(path.frames[1:] @ Mj)
    return SympPath(np.concatenate(times), np.concatenate(frames), f"{path.label}^{k}", validate=False)


def delta_homogenized(monodromy_path: SympPath, k: int) -> DeltaReport:
    """Delta_tilde of the k-fold iterate divided by k, with a tail estimate.

    ``tail`` is |D(k)/k - D(k')/k'| for k' = k // 2, a Richardson-style
    indication of how far the homogenization limit still is.
    """
    if not 1 <= k <= 64:
        raise ValueError("k must be in 1..64")
    it = iterate_path(monodromy_path, k)
    rep = delta_tilde(it)
    value = rep.delta / k
    tail = None
    if k >= 2:
        kh = k // 2
        N = len(monodromy_path) - 1
        half = (rep.winding_trace[kh * N] - rep.winding_trace[0]) / math.pi / kh
        tail = abs(value - half)
    return DeltaReport(value, rep.winding_trace, f"homogenized({k})", tail)
