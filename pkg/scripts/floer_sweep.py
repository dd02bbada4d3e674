"""Window verdicts and homotopy margins over a grid of model geometries.

    python3 scripts/floer_sweep.py
"""
import itertools

from sympidx.floer import GeometryParams, check_window, derive_levels, homotopy_trace


def main():
    print(" m  q   r^2  lam_max      C         a         b       k   verdicts  margin")
    for m, q, r2, ratio in itertools.product((1, 2, 3), (1, 2, 3), (0.25, 1.0), (1.0, 4.0)):
        p = GeometryParams.from_r2(m, q, r2, r2 / 10, 1.0, ratio)
        s = derive_levels(p)
        v = check_window(s).verdicts
        h = homotopy_trace(p)
        flags = "".join("T" if v[key] else "F" for key in sorted(v))
        print(f"{m:>2} {q:>2} {r2:5.2f} {ratio:6.1f}  {s.C:9.5f} {s.a:9.5f} {s.b:9.5f} {s.k:5d}  "
              f"{flags}   {h.margin:.3e}")


if __name__ == "__main__":
    main()
