"""Conley-Zehnder index against the winding Delta-tilde on random linear flows.

Prints the histogram of mu - Delta-tilde, which must stay in [-n, n].

    python3 scripts/cz_bracket.py --paths 200 --T 5
"""
import argparse
import collections

import numpy as np

from sympidx.index import conley_zehnder
from sympidx.paths import delta_tilde, linear_flow
from sympidx.sampling import random_quad_hamiltonian


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--T", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    for n in (1, 2):
        hist = collections.Counter()
        worst = 0.0
        done = 0
        while done < args.paths:
            p = linear_flow(random_quad_hamiltonian(n, rng), (0.0, args.T), 200)
            if abs(np.linalg.det(np.eye(2 * n) - p.frames[-1])) < 1e-6:
                continue
            done += 1
            gap = conley_zehnder(p) - delta_tilde(p).delta
            worst = max(worst, abs(gap))
            hist[round(gap * 2) / 2] += 1
        print(f"n = {n}: max |mu - delta| = {worst:.4f} (bound {n})")
        for k in sorted(hist):
            print(f"  {k:+5.1f}  {'#' * max(1, hist[k] * 60 // args.paths)} {hist[k]}")


if __name__ == "__main__":
    main()
