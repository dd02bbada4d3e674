"""Linear symplectic algebra on R^{2n} with coordinates (x_1..x_n, y_1..y_n).

The complex identification is z_j = x_j + i y_j, so the standard complex
structure J = [[0, -I], [I, 0]] acts as multiplication by i and a unitary
matrix [[X, -Y], [Y, X]] corresponds to the complex matrix X + iY.

Two circle-valued maps live here: ``rho_tilde`` (complex determinant of the
polar unitary factor) and ``rho_eigen`` (eigenvalue map ordered by Krein sign).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NearDegenerate, NonSymplectic, NotUnitary

POLAR_COND = 1e8
SYMP_TOL = 1e-9
CLUSTER_SEP = 1e-6


def standard_J(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def half_dim(A: np.ndarray) -> int:
    d = A.shape[-1]
    if A.shape[-2] != d or d < 2 or d % 2:
        raise NonSymplectic(f"expected an even square matrix, got shape {A.shape}")
    return d // 2


def symplectic_defect(A: np.ndarray) -> float:
    """max-norm of A^T J A - J (works on stacks, returns the worst frame)."""
    J = standard_J(half_dim(A))
    E = np.swapaxes(A, -1, -2) @ J @ A - J
    return float(np.max(np.abs(E)))


def check_symplectic(A: np.ndarray, tol: float = SYMP_TOL) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    J = standard_J(half_dim(A))
    E = np.swapaxes(A, -1, -2) @ J @ A - J
    # roundoff in A^T J A grows like |A|^2
    scale = np.maximum(1.0, np.max(np.abs(A), axis=(-2, -1)) ** 2)
    if np.any(np.max(np.abs(E), axis=(-2, -1)) >= tol * scale):
        raise NonSymplectic(f"|A^T J A - J| = {np.max(np.abs(E)):.3e}")
    return A


def symp_inverse(A: np.ndarray) -> np.ndarray:
    """A^{-1} = -J A^T J for symplectic A."""
    J = standard_J(half_dim(A))
    return -J @ np.swapaxes(A, -1, -2) @ J


def renormalize(A: np.ndarray) -> np.ndarray:
    """One Newton step back onto Sp: A(I + J E / 2) with E = A^T J A - J.

    Frames whose defect is not small are left alone: for large |A| the defect
    is roundoff of size eps |A|^2 and the step would amplify it.
    """
    J = standard_J(half_dim(A))
    E = np.swapaxes(A, -1, -2) @ J @ A - J
    small = np.max(np.abs(E), axis=(-2, -1), keepdims=True) < 1e-6
    return A + 0.5 * (A @ J @ np.where(small, E, 0.0))


def rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def symplectic_sum(*mats: np.ndarray) -> np.ndarray:
    """Direct sum A_1 x A_2 x ... in the (x..., y...) coordinate ordering."""
    ns = [half_dim(M) for M in mats]
    n = sum(ns)
    out = np.zeros((2 * n, 2 * n))
    off = 0
    for M, k in zip(mats, ns):
        idx = np.r_[off:off + k, n + off:n + off + k]
        out[np.ix_(idx, idx)] = M
        off += k
    return out


def complex_form(U: np.ndarray) -> np.ndarray:
    n = half_dim(U)
    return U[..., :n, :n] + 1j * U[..., n:, :n]


def from_complex(W: np.ndarray) -> np.ndarray:
    X, Y = W.real, W.imag
    return np.block([[X, -Y], [Y, X]])


def polar_unitary(A: np.ndarray, check: bool = True) -> np.ndarray:
    """Unitary factor U of A = QU (Q symmetric positive definite).

    Computed from the SVD A = W diag(s) V^T as U = W V^T, which equals
    (A A^T)^{-1/2} A without forming A A^T. Accepts stacks of matrices.

    For ill-conditioned A the singular pairs below 1 are drowned in roundoff,
    so they are rebuilt from the accurate ones above 1: if A v = s w then
    A (J v) = (J w) / s for symplectic A.
    """
    A = np.asarray(A, dtype=float)
    if check:
        check_symplectic(A)
    W, sv, Vt = np.linalg.svd(A)
    U = W @ Vt
    bad = sv[..., 0] > POLAR_COND * sv[..., -1]
    if np.any(bad):
        J = standard_J(half_dim(A))
        flat_U = U.reshape(-1, *A.shape[-2:])
        flat = (W.reshape(flat_U.shape), sv.reshape(-1, A.shape[-1]), Vt.reshape(flat_U.shape))
        for idx in np.flatnonzero(bad.ravel()):
            w, s, vt = (x[idx] for x in flat)
            # only the top half can be the large members of pairs (s, 1/s)
            k = int(np.sum(s[:len(s) // 2] > 1.0 + 1e-3))
            dim = len(s)
            top_w, top_v = w[:, :k], vt[:k].T
            mid_w, mid_v = w[:, k:dim - k], vt[k:dim - k].T
            flat_U[idx] = (top_w @ top_v.T + (J @ top_w) @ (J @ top_v).T + mid_w @ mid_v.T)
        U = flat_U.reshape(A.shape)
    return U


def check_unitary(U: np.ndarray, tol: float = SYMP_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    J = standard_J(half_dim(U))
    eye = np.eye(U.shape[-1])
    orth = np.max(np.abs(np.swapaxes(U, -1, -2) @ U - eye))
    comm = np.max(np.abs(U @ J - J @ U))
    if orth >= tol or comm >= tol:
        raise NotUnitary(f"orthogonality defect {orth:.3e}, J-commutator {comm:.3e}")
    return U


def det_complex(U: np.ndarray, check: bool = True) -> complex | np.ndarray:
    """Complex determinant of a unitary map (stack-aware)."""
    if check:
        check_unitary(U)
    d = np.linalg.det(complex_form(np.asarray(U, dtype=float)))
    d = d / np.abs(d)
    return complex(d) if np.ndim(d) == 0 else d


def rho_tilde(A: np.ndarray, check: bool = True) -> complex | np.ndarray:
    U = polar_unitary(A, check=check)
    return det_complex(U, check=False)


def _clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    """Single-linkage clusters of eigenvalues at distance tol."""
    order = np.argsort(w.real)
    parent = list(range(len(w)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(w)):
        for b in range(a + 1, len(w)):
            if abs(w[a] - w[b]) <= tol:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for i in order:
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def rho_eigen(A: np.ndarray, strict: bool = True, merge_tol: float | None = None,
              real_tol: float | None = None) -> complex:
    """Eigenvalue circle map.

    Each conjugate pair of unit-circle eigenvalues contributes its member
    with positive Krein sign i*w(v, conj v) (w(u, v) = u^T J v), real
    negative eigenvalues contribute (-1)^{m/2}, everything else 1.

    strict=True enforces the semisimple, well-separated domain and raises
    NearDegenerate otherwise. strict=False is the path-tracking mode: nearby
    eigenvalues are merged at ``merge_tol`` and the Krein form is evaluated on
    the merged eigenspace, which keeps the value continuous through Krein
    collisions and Jordan blocks; ``real_tol`` snaps clusters that close to the
    real axis onto it.
    """
    A = check_symplectic(A)
    n = half_dim(A)
    J = standard_J(n)
    w, V = np.linalg.eig(A)
    scale = max(1.0, float(np.max(np.abs(w))))
    if merge_tol is None:
        merge_tol = 1e-9 * scale if strict else 1e-5
    if real_tol is None:
        real_tol = merge_tol
    groups = _clusters(w, merge_tol)
    centers = [w[g].mean() for g in groups]

    if strict:
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                if abs(centers[i] - centers[j]) < CLUSTER_SEP:
                    raise NearDegenerate(
                        f"eigenvalues {centers[i]:.6g} and {centers[j]:.6g} closer than {CLUSTER_SEP}")
        for c in centers:
            off_circle = abs(abs(c) - 1.0)
            if merge_tol < off_circle < CLUSTER_SEP or real_tol < abs(c.imag) < CLUSTER_SEP:
                raise NearDegenerate(f"eigenvalue {c:.6g} is ambiguously placed")

    rho = 1.0 + 0.0j
    m_neg = 0
    for g, c in zip(groups, centers):
        if abs(c.imag) <= real_tol:
            if c.real < 0:
                m_neg += len(g)
            continue
        if c.imag < 0 or abs(abs(c) - 1.0) > merge_tol:
            continue
        Vg = V[:, g]
        G = 1j * (Vg.T @ J @ Vg.conj())
        G = 0.5 * (G + G.conj().T)
        ev = np.linalg.eigvalsh(G)
        if strict and np.min(np.abs(ev)) < 1e-9 * np.max(np.abs(ev)):
            raise NearDegenerate(f"degenerate Krein form at eigenvalue {c:.6g}")
        p = int(np.sum(ev > 0))
        q = len(g) - p
        u = c / abs(c)
        rho *= u ** p * np.conj(u) ** q
    if m_neg % 2:
        raise NonSymplectic("odd number of negative real eigenvalues")
    rho *= (-1) ** (m_neg // 2)
    return complex(rho / abs(rho))


class PowerDefect(NamedTuple):
    rho: float
    rho_tilde: float


def rho_power_check(A: np.ndarray, k: int) -> PowerDefect:
    """Defects |rho(A^k) - rho(A)^k| for the eigenvalue map and its polar surrogate."""
    if abs(k) > 20:
        raise ValueError("|k| must be <= 20")
    A = check_symplectic(A)
    Ak = np.linalg.matrix_power(A if k >= 0 else symp_inverse(A), abs(k))
    d_rho = abs(rho_eigen(Ak) - rho_eigen(A) ** k)
    d_tilde = abs(rho_tilde(Ak, check=False) - rho_tilde(A, check=False) ** k)
    return PowerDefect(float(d_rho), float(d_tilde))
