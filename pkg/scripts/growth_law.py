"""Linear growth of the winding along iterates of a magnetic periodic orbit.

Fits |Delta(x^j)| against jT and reports the slope a and offset c.

    python3 scripts/growth_law.py --r 0.05 --k 10
"""
import argparse

from sympidx.magnetic import MagneticSystem
from sympidx.orbits import growth_fit, orbit_delta, shoot_periodic
from sympidx.paths import Convention

WAVY = [[1, 1, 0.025, 0.2], [2, -1, 0.015, 1.1], [0, 1, 0.01, 0.0]]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--B", type=float, default=1.0)
    ap.add_argument("--r", type=float, default=0.05)
    ap.add_argument("--k", type=int, default=10)
    args = ap.parse_args()
    sys_ = MagneticSystem.conformal(WAVY, args.B)
    ham = sys_.hamiltonian()
    z0, T0 = sys_.seed_orbit(args.r)
    orb = shoot_periodic(ham, z0, T0, convention=Convention.MECHANICS)
    deltas = orbit_delta(ham, orb, args.k)
    fit = growth_fit([(j * orb.period, d) for j, d in enumerate(deltas, start=1)])
    print(f"T = {orb.period:.6f}, residual {orb.residual:.1e}")
    print(" j      jT        delta     a*jT - c")
    for j, d in enumerate(deltas, start=1):
        print(f"{j:>2}  {j * orb.period:9.4f}  {d:+9.5f}  {fit.a * j * orb.period - fit.c:9.5f}")
    print(f"a = {fit.a:.6f}  c = {fit.c:.6f}  r^2 = {fit.r_squared:.8f}  bound holds: {fit.bound_holds()}")


if __name__ == "__main__":
    main()
