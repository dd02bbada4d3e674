"""Periodic orbits by Newton shooting, winding growth along iterates, and
period sweeps over energy levels."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateFit, NoConvergence, SingularJacobian, SympIdxError
from .hamflow import TORUS_BASE, HamSystem, flow, variational_flow
from .paths import Convention, delta_rho, delta_tilde

COND_LIMIT = 1e12


@dataclass(frozen=True)
class OrbitRecord:
    """A periodic orbit through z0.

    ``residual`` is the closure defect |phi_T(z0) - z0| with positions
    compared mod 2 pi on toroidal bases; ``winding`` is the lifted position
    displacement over one period in units of 2 pi.
    """
    z0: np.ndarray
    period: float
    energy: float
    residual: float
    contractible: bool
    convention: Convention = Convention.JGRAD
    winding: Optional[tuple[int, ...]] = None
    delta_per_period: Optional[float] = None
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        if not self.period > 0:
            raise ValueError("period must be positive")


def _winding(system: HamSystem, z_start, z_end) -> tuple[Optional[tuple[int, ...]], bool]:
    if system.topology != TORUS_BASE:
        return None, True
    lifted = np.asarray(z_end[:system.n]) - np.asarray(z_start[:system.n])
    w = tuple(int(v) for v in np.rint(lifted / (2 * np.pi)))
    return w, all(v == 0 for v in w)


def _residual_map(system, z, T, z_s, f_s, H_s, steps, convention, order):
    tr = flow(system, z, T, steps, convention, order, tangent=True)
    end = tr.states[-1]
    sgn = Convention(convention).sign
    F = np.concatenate([system.displacement(end, z), [(z - z_s) @ f_s, system.energy(z) - H_s]])
    d = system.dim
    Jac = np.zeros((d + 2, d + 1))
    Jac[:d, :d] = tr.tangent - np.eye(d)
    Jac[:d, d] = sgn * system.vector_field(end)
    Jac[d, :d] = f_s
    Jac[d + 1, :d] = system.gradient(z)
    return F, Jac, tr


def shoot_periodic(system: HamSystem, seed_z, seed_T: float, max_iter: int = 20,
                   convention: Convention = Convention.JGRAD, steps: int = 1000, order: int = 6,
                   tol: float = 1e-10) -> OrbitRecord:
    """Newton shooting for a periodic orbit near (seed_z, seed_T).

    Unknowns are (z, T). Equations are the closure defect, a Poincare section
    through the seed orthogonal to the flow, and the seed's energy. The
    overdetermined system is solved in the minimum-norm least-squares sense:
    singular values below 1e-12 of the largest are dropped, which removes the
    directions along continuous orbit families. Steps are halved (at most 8
    times) while the residual grows.
    """
    if not seed_T > 0:
        raise ValueError("seed_T must be positive")
    convention = Convention(convention)
    z_s = np.array(seed_z, dtype=float)
    f_s = convention.sign * system.vector_field(z_s)
    if np.linalg.norm(f_s) == 0:
        raise SingularJacobian("seed is an equilibrium; the section is undefined")
    H_s = system.energy(z_s)
    z, T = z_s.copy(), float(seed_T)
    F, Jac, tr = _residual_map(system, z, T, z_s, f_s, H_s, steps, convention, order)
    it = 0
    while np.max(np.abs(F)) > tol:
        if it >= max_iter:
            raise NoConvergence(f"shooting residual {np.max(np.abs(F)):.2e} after {max_iter} iterations")
        it += 1
        U, s, Vt = np.linalg.svd(Jac, full_matrices=False)
        keep = s > s[0] / COND_LIMIT
        if s[0] == 0 or keep.sum() < 2:
            raise SingularJacobian(f"Newton matrix has numerical rank {int(keep.sum())}")
        dx = -(Vt[keep].T @ ((U[:, keep].T @ F) / s[keep]))
        norm0 = np.linalg.norm(F)
        lam = 1.0
        for _ in range(9):
            z_new, T_new = z + lam * dx[:-1], T + lam * dx[-1]
            if T_new > 0:
                F_new, Jac_new, tr_new = _residual_map(system, z_new, T_new, z_s, f_s, H_s,
                                                       steps, convention, order)
                if np.linalg.norm(F_new) < norm0:
                    break
            lam *= 0.5
        else:
            raise NoConvergence("damped Newton step failed to reduce the residual")
        z, T, F, Jac, tr = z_new, T_new, F_new, Jac_new, tr_new
    winding, contractible = _winding(system, tr.states[0], tr.states[-1])
    residual = float(np.linalg.norm(system.displacement(tr.states[-1], tr.states[0])))
    return OrbitRecord(z, T, system.energy(z), residual, contractible, convention, winding, None, it)


def orbit_delta(system: HamSystem, orbit: OrbitRecord, k: int, steps_per_period: int = 400,
                order: int = 6, method: str = "tilde") -> list[float]:
    """Winding of the linearized flow over j = 1..k periods, read off one k-period run."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    measure = {"tilde": delta_tilde, "rho": delta_rho}[method]
    tr = flow(system, orbit.z0, k * orbit.period, k * steps_per_period, orbit.convention, order)
    path = variational_flow(system, tr)
    rep = measure(path)
    idx = [int(np.argmin(np.abs(path.times - j * orbit.period))) for j in range(1, k + 1)]
    return [float((rep.winding_trace[i] - rep.winding_trace[0]) / math.pi) for i in idx]


@dataclass(frozen=True)
class GrowthFit:
    """|Delta| ~ a T - c_fit, with ``c`` = c_fit + max residual so that
    |Delta_i| >= a T_i - c holds on every stored sample."""
    a: float
    c: float
    c_fit: float
    r_squared: float
    samples: tuple[tuple[float, float], ...]

    def bound_holds(self, tol: float = 1e-12) -> bool:
        return all(abs(d) >= self.a * T - self.c - tol for T, d in self.samples)


def growth_fit(samples: Sequence[tuple[float, float]]) -> GrowthFit:
    """Least-squares affine fit of |delta| against T."""
    pts = [(float(T), float(d)) for T, d in samples]
    if len(pts) < 3:
        raise ValueError("need at least 3 samples")
    T = np.array([p[0] for p in pts])
    y = np.abs([p[1] for p in pts])
    if np.ptp(T) == 0:
        raise DegenerateFit("all sample times are equal")
    fit = stats.linregress(T, y)
    resid = y - (fit.slope * T + fit.intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    c_fit = -float(fit.intercept)
    return GrowthFit(float(fit.slope), c_fit + float(np.max(np.abs(resid))), c_fit,
                     min(max(r2, 0.0), 1.0), tuple(pts))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SYMPIDX_THREADS", "1")))
    except ValueError:
        return 1


def period_bound_sweep(sys, r_list: Sequence[float], seed: int = 0, k: int = 0,
                       convention: Convention = Convention.MECHANICS, steps: int = 1000,
                       max_iter: int = 20) -> list[dict]:
    """One shooting run per energy level K = r^2, seeded by the system's local circle.

    ``sys`` is a magnetic system (anything with ``hamiltonian()``
    and ``seed_orbit(r, convention, rng)``). A failing row is reported with
    ``failed=True`` and the error name; the sweep carries on.
    """
    r_list = [float(r) for r in r_list]
    if any(r <= 0 for r in r_list):
        raise ValueError("r values must be positive")
    if any(a < b for a, b in zip(r_list, r_list[1:])):
        raise ValueError("r values must be in descending order")
    ham = sys.hamiltonian()
    seeds = np.random.SeedSequence(seed).spawn(len(r_list))

    def row(i):
        r = r_list[i]
        out = {"r": r, "T": math.nan, "residual": math.nan, "contractible": False,
               "iterations": 0, "failed": False, "error": ""}
        out.update({f"delta_{j}": math.nan for j in range(1, k + 1)})
        try:
            z0, T0 = sys.seed_orbit(r, convention, np.random.default_rng(seeds[i]))
            orb = shoot_periodic(ham, z0, T0, max_iter, convention, steps)
            out.update(T=orb.period, residual=orb.residual, contractible=orb.contractible,
                       iterations=orb.iterations)
            for j, d in enumerate(orbit_delta(ham, orb, k), start=1):
                out[f"delta_{j}"] = d
        except SympIdxError as exc:
            out.update(failed=True, error=type(exc).__name__)
        return out

    workers = min(_threads(), len(r_list)) or 1
    if workers == 1:
        return [row(i) for i in range(len(r_list))]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(row, range(len(r_list))))
