"""Random symplectic objects for property tests and experiment scripts."""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .linalg import rot, standard_J, symplectic_sum
from .paths import Convention, QuadHamiltonian


def random_symmetric(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(size=(dim, dim)) * scale
    return 0.5 * (G + G.T)


def random_psd(dim: int, rng: np.random.Generator, scale: float = 1.0, rank: int | None = None) -> np.ndarray:
    G = rng.normal(size=(dim, rank or dim)) * scale
    return G @ G.T / G.shape[1]


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """exp(J S) for a random symmetric S; conditioning stays moderate for scale <= 1."""
    return expm(standard_J(n) @ random_symmetric(2 * n, rng, scale))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    X, Y = Q.real, Q.imag
    return np.block([[X, -Y], [Y, X]])


def _elliptic(rng):
    # keep away from +-1 so the spectrum stays well separated
    theta = rng.uniform(0.15, np.pi - 0.15) * rng.choice([-1.0, 1.0])
    return rot(theta)


def _hyperbolic(rng):
    lam = np.exp(rng.uniform(0.2, 1.5)) * rng.choice([-1.0, 1.0])
    return np.diag([lam, 1.0 / lam])


def _loxodromic(rng):
    r = np.exp(rng.uniform(0.2, 1.0))
    M = r * rot(rng.uniform(0.3, np.pi - 0.3))
    return np.block([[M, np.zeros((2, 2))], [np.zeros((2, 2)), np.linalg.inv(M).T]])


def random_normal_form(n: int, rng: np.random.Generator, kinds: tuple[str, ...] = ("e", "h", "l")) -> np.ndarray:
    """Direct sum of elliptic, hyperbolic and (in pairs of dimensions) loxodromic blocks."""
    blocks = []
    left = n
    while left:
        kind = rng.choice([k for k in kinds if k != "l" or left >= 2])
        if kind == "e":
            blocks.append(_elliptic(rng))
            left -= 1
        elif kind == "h":
            blocks.append(_hyperbolic(rng))
            left -= 1
        else:
            blocks.append(_loxodromic(rng))
            left -= 2
    return symplectic_sum(*blocks)


def spectrum_separated(A: np.ndarray, sep: float = 1e-3) -> bool:
    w = np.linalg.eigvals(A)
    d = np.abs(w[:, None] - w[None, :])
    np.fill_diagonal(d, np.inf)
    # exactly repeated eigenvalues are fine (semisimple by construction)
    d[d < 1e-10] = np.inf
    return bool(np.min(d) > sep)


def random_generic_symplectic(n: int, rng: np.random.Generator, kinds=("e", "h", "l"),
                              conj_scale: float = 0.4, sep: float = 1e-3) -> np.ndarray:
    """B^{-1} D B with D in normal form, resampled until the spectrum is separated."""
    while True:
        D = random_normal_form(n, rng, kinds)
        B = random_symplectic(n, rng, conj_scale)
        A = np.linalg.solve(B, D @ B)
        if spectrum_separated(A, sep):
            return A


def random_quad_hamiltonian(n: int, rng: np.random.Generator, scale: float = 0.7,
                            convention: Convention = Convention.JGRAD) -> QuadHamiltonian:
    """S(t) = A + sin(w t + phi) B with random symmetric A, B."""
    A = random_symmetric(2 * n, rng, scale)
    B = random_symmetric(2 * n, rng, scale)
    w, phi = rng.uniform(0.5, 2.0), rng.uniform(0.0, 2 * np.pi)
    return QuadHamiltonian(2 * n, lambda t: A + np.sin(w * t + phi) * B, convention)


def random_unitary_hamiltonian(n: int, rng: np.random.Generator, scale: float = 0.7) -> QuadHamiltonian:
    """Constant S commuting with J, so the flow stays unitary."""
    X = random_symmetric(n, rng, scale)
    G = rng.normal(size=(n, n)) * scale
    Y = 0.5 * (G - G.T)
    # S = [[X, -Y], [Y, X]] with X symmetric and Y antisymmetric is symmetric and commutes with J
    return QuadHamiltonian.constant(np.block([[X, -Y], [Y, X]]))
