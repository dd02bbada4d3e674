"""Worst-case defects of the eigenvalue-based rho map over random samples.

    python3 scripts/rho_axioms.py --samples 200 --seed 1
"""
import argparse

import numpy as np

from sympidx.linalg import det_complex, rho_eigen, symp_inverse, symplectic_sum
from sympidx.sampling import (random_generic_symplectic, random_symplectic, random_unitary,
                              spectrum_separated)


def defects(n, samples, rng):
    worst = dict(conjugation=0.0, product=0.0, unitary=0.0, inverse=0.0)
    for _ in range(samples):
        A = random_generic_symplectic(n, rng)
        B = random_symplectic(n, rng, 0.4)
        worst["conjugation"] = max(worst["conjugation"],
                                   abs(rho_eigen(np.linalg.solve(B, A @ B)) - rho_eigen(A)))
        A2 = random_generic_symplectic(1, rng)
        S = symplectic_sum(A, A2)
        if spectrum_separated(S):
            worst["product"] = max(worst["product"], abs(rho_eigen(S) - rho_eigen(A) * rho_eigen(A2)))
        U = random_unitary(n, rng)
        worst["unitary"] = max(worst["unitary"], abs(rho_eigen(U) - det_complex(U)))
        worst["inverse"] = max(worst["inverse"], abs(rho_eigen(symp_inverse(A)) * rho_eigen(A) - 1))
    return worst


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("dim  conjugation  product   unitary   inverse")
    for n in (1, 2, 3, 4):
        w = defects(n, args.samples, rng)
        print(f"{2 * n:>3}  " + "  ".join(f"{w[k]:.2e}" for k in ("conjugation", "product", "unitary", "inverse")))


if __name__ == "__main__":
    main()
