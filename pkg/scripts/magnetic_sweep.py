"""Periods of contractible orbits on shrinking energy levels of a perturbed metric.

    python3 scripts/magnetic_sweep.py --B 1 --r 0.2,0.1,0.05,0.02
"""
import argparse
import math

from sympidx.magnetic import MagneticSystem
from sympidx.orbits import period_bound_sweep

WAVY = [[1, 0, 0.03, 0.0], [0, 1, 0.02, 0.7]]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--B", type=float, default=1.0)
    ap.add_argument("--r", default="0.2,0.1,0.05,0.02")
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rs = [float(x) for x in args.r.split(",")]
    rows = period_bound_sweep(MagneticSystem.conformal(WAVY, args.B), rs, args.seed, args.k)
    print("r        T          T*B/2pi   residual   " + "  ".join(f"delta_{j}" for j in range(1, args.k + 1)))
    for row in rows:
        if row["failed"]:
            print(f"{row['r']:<8g} failed: {row['error']}")
            continue
        ds = "  ".join(f"{row[f'delta_{j}']:+.4f}" for j in range(1, args.k + 1))
        print(f"{row['r']:<8g} {row['T']:.6f}  {row['T'] * args.B / (2 * math.pi):.6f}  "
              f"{row['residual']:.1e}    {ds}")


if __name__ == "__main__":
    main()
