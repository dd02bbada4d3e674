"""Conley-Zehnder index by crossing forms, quasi-morphism defect and Sturm comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (DegenerateEndpoint, DimMismatch, NotComparable,
                     UnresolvedCrossing)
from .linalg import standard_J
from .paths import QuadHamiltonian, SympPath, delta_tilde, linear_flow

RESOLUTION = 1e-10
PERTURBATION = 1e-7


class _NonRegular(Exception):
    pass


def _log_near_identity(E: np.ndarray) -> np.ndarray:
    """Batched log(I + X) by its power series; callers guarantee |X| < 1/2."""
    X = E - np.eye(E.shape[-1])
    out = np.zeros_like(X)
    term = np.broadcast_to(np.eye(E.shape[-1]), X.shape).copy()
    for k in range(1, 200):
        term = term @ X
        out += ((-1) ** (k + 1) / k) * term
        if np.max(np.abs(term)) / k < 1e-18:
            break
    return out


@dataclass(frozen=True)
class Crossing:
    t: float
    kernel_dim: int
    signature: int


class _Segments:
    """Geodesic interpolation Phi(t_i + s h_i) = exp(s L_i) Phi_i of a sampled path.

    Points are addressed by u = i + s in [0, N], N the number of steps.
    """

    def __init__(self, path: SympPath):
        self.path = path
        J = standard_J(path.n)
        self.h = np.diff(path.times)
        L = _log_near_identity(path.steps())
        # project onto the Hamiltonian algebra: L = J S with S symmetric
        S = -J @ L
        S = 0.5 * (S + np.swapaxes(S, -1, -2))
        self.L = J @ S
        self.S = S / self.h[:, None, None]
        self.N = len(path) - 1

    def split(self, u):
        u = np.asarray(u, dtype=float)
        i = np.clip(np.floor(u).astype(int), 0, self.N - 1)
        return i, u - i

    def time(self, u):
        i, s = self.split(u)
        return self.path.times[i] + s * self.h[i]

    def frames(self, u) -> np.ndarray:
        i, s = self.split(np.atleast_1d(u))
        return expm(s[:, None, None] * self.L[i]) @ self.path.frames[i]


def _gap(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """det(I - F) and the relative gap sigma_min(I - F) / max(1, |F|_2), batched."""
    eye = np.eye(F.shape[-1])
    d = np.linalg.det(eye - F)
    sv = np.linalg.svd(eye - F, compute_uv=False)[..., -1]
    nrm = np.linalg.norm(F, ord=2, axis=(-2, -1))
    return d, sv / np.maximum(1.0, nrm)


def _signature(G: np.ndarray) -> int:
    G = 0.5 * (G + G.T)
    ev = np.linalg.eigvalsh(G)
    if np.min(np.abs(ev)) < 1e-9 * max(1.0, float(np.max(np.abs(ev)))):
        raise _NonRegular("degenerate crossing form")
    return int(np.sum(ev > 0) - np.sum(ev < 0))


def _crossing_at(seg: _Segments, u: float, odd: bool) -> Crossing | None:
    """Kernel and crossing form at a located zero of det(I - Phi)."""
    F = seg.frames(u)[0]
    dim = F.shape[0]
    _, sv, Vt = np.linalg.svd(np.eye(dim) - F)
    scale = max(1.0, float(np.linalg.norm(F, 2)))
    if sv[-1] > 1e-7 * scale:
        if odd:
            raise UnresolvedCrossing(f"sign change without a kernel near t={float(seg.time(u)):.12g}")
        return None
    cut = max(100 * sv[-1], 1e-12 * scale)
    if np.any((sv > cut) & (sv < 1e-6 * scale)):
        raise UnresolvedCrossing(f"cannot separate crossings near t={float(seg.time(u)):.12g}")
    V = Vt[sv <= cut].T
    if V.shape[1] % 2 != int(odd):
        raise _NonRegular("kernel dimension disagrees with the sign of det(I - Phi)")
    i, _ = seg.split(u)
    return Crossing(float(seg.time(u)), V.shape[1], _signature(V.T @ seg.S[int(i)] @ V))


def _bisect(seg: _Segments, lo: float, hi: float, d_lo: float, res: float) -> float:
    while seg.time(hi) - seg.time(lo) > res:
        mid = 0.5 * (lo + hi)
        d, _ = _gap(seg.frames(mid))
        if d[0] == 0.0:
            return mid
        if np.sign(d[0]) == np.sign(d_lo):
            lo, d_lo = mid, d[0]
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan(seg: _Segments, u: np.ndarray, F: np.ndarray, res: float, depth: int = 0) -> list[Crossing]:
    """Crossings on the grid u: bisect every sign change of det(I - Phi) and
    refine around local minima of the relative gap that the step bound cannot
    exclude (these hide even-dimensional or tangential crossings)."""
    d, r = _gap(F)
    out = []
    sign_change = d[:-1] * d[1:] < 0
    for j in np.flatnonzero(sign_change):
        out.append(_crossing_at(seg, _bisect(seg, u[j], u[j + 1], d[j], res), odd=True))
    for j in range(1, len(u) - 1):
        if not (r[j] <= r[j - 1] and r[j] <= r[j + 1]):
            continue
        if sign_change[j - 1] or sign_change[j]:
            continue
        i, _ = seg.split(u[j])
        reach = (u[j + 1] - u[j - 1]) * float(np.linalg.norm(seg.L[int(i)], 2))
        if r[j] > math.expm1(reach):
            continue
        if seg.time(u[j + 1]) - seg.time(u[j - 1]) <= res or depth > 12:
            c = _crossing_at(seg, u[j], odd=False)
            if c is not None:
                out.append(c)
            continue
        sub = np.linspace(u[j - 1], u[j + 1], 17)
        out.extend(_scan(seg, sub, seg.frames(sub), res, depth + 1))
    return out


def _crossings(path: SympPath, res: float) -> list[Crossing]:
    seg = _Segments(path)
    t0 = path.times[0]
    dim = path.dim
    S0 = seg.S[0]
    found = [Crossing(t0, dim, _signature(S0))]
    # near the start det(I - Phi(s)) ~ s^dim det(S0); begin the grid just after it
    head = np.geomspace(1e-6, 1.0, 25)[:-1]
    d_head, _ = _gap(seg.frames(head[0]))
    if np.sign(d_head[0]) != np.sign(np.linalg.det(S0)):
        raise _NonRegular("crossing at the start is not isolated")
    u = np.concatenate([head, np.arange(1, seg.N + 1, dtype=float)])
    F = np.concatenate([seg.frames(head), path.frames[1:]])
    cands = sorted(_scan(seg, u, F, res), key=lambda c: c.t)
    for c in cands:
        if c.t - found[-1].t > 3 * res:
            found.append(c)
    return found


def _perturbed(path: SympPath, eps: float) -> SympPath:
    J = standard_J(path.n)
    R = np.array([expm(eps * (t - path.times[0]) * J) for t in path.times])
    return SympPath(path.times, R @ path.frames, path.label, validate=False)


def crossings(path: SympPath, res: float = RESOLUTION) -> list[Crossing]:
    """Crossings of the path with the Maslov cycle {det(I - Phi) = 0}.

    Non-regular crossings are removed by the perturbation exp(eps t J) Phi(t),
    which adds eps*I to the generator and leaves the index unchanged as long as
    the endpoint stays nondegenerate.
    """
    if np.max(np.abs(path.frames[0] - np.eye(path.dim))) > 1e-9:
        raise ValueError("the index needs a path starting at the identity")
    end = np.linalg.det(np.eye(path.dim) - path.frames[-1])
    if abs(end) <= 1e-8:
        raise DegenerateEndpoint(f"det(I - Phi(T)) = {end:.3e}")
    try:
        return _crossings(path, res)
    except _NonRegular:
        pass
    try:
        return _crossings(_perturbed(path, PERTURBATION), res)
    except _NonRegular as exc:
        raise UnresolvedCrossing(str(exc)) from None


def conley_zehnder(path: SympPath, res: float = RESOLUTION) -> int:
    """Conley-Zehnder index: half the signature at t=0 plus interior signatures."""
    cr = crossings(path, res)
    total = cr[0].signature + 2 * sum(c.signature for c in cr[1:])
    return total // 2


def quasimorphism_defect(phi: SympPath, psi: SympPath) -> float:
    """|D(psi phi) - D(psi) - D(phi)| for D = Delta_tilde and the pointwise product path."""
    if phi.dim != psi.dim:
        raise DimMismatch(f"dimensions {phi.dim} and {psi.dim}")
    if len(phi) != len(psi):
        raise DimMismatch("paths must share a sample count")
    prod = psi.pointwise(phi)
    return abs(delta_tilde(prod).delta - delta_tilde(psi).delta - delta_tilde(phi).delta)


@dataclass(frozen=True)
class SturmReport:
    delta_h1: float
    delta_h0: float
    margin: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.margin >= -self.bound


def sturm_compare(H0: QuadHamiltonian, H1: QuadHamiltonian, T: float, steps: int = 400,
                  check_points: int = 257) -> SturmReport:
    """Compare Delta_tilde of the flows of H1 >= H0 over [0, T]."""
    if H0.dim != H1.dim:
        raise DimMismatch(f"dimensions {H0.dim} and {H1.dim}")
    for t in np.linspace(0.0, T, check_points):
        lo = float(np.linalg.eigvalsh(H1(t) - H0(t))[0])
        if lo < -1e-10:
            raise NotComparable(f"H1 - H0 has eigenvalue {lo:.3e} at t={t:.6g}")
    d1 = delta_tilde(linear_flow(H1, (0.0, T), steps)).delta
    d0 = delta_tilde(linear_flow(H0, (0.0, T), steps)).delta
    return SturmReport(d1, d0, d1 - d0, float(H0.dim))
