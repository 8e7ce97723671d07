"""Finite-size cylinder statistics against their limits.

Prints P_n(0 loops) for the wired n x m cylinder next to p_tau(0) with the
aspect ratio taken both as n/m and as n/(m+1), then the curved-cylinder
ratio Z_Phi / Z_I for a few curvature constants.
"""
import numpy as np

from crsf.closed_forms import curved_cylinder_ratio, p_tau, wired_cylinder_loop_pgf


def main():
    target = p_tau(1.0, 0.0)
    print(f"p_1(0) = {target:.15f}")
    print(f"{'n':>5} {'P(0), m=n':>14} {'err':>10} {'P(0), m=n-1':>14} {'err':>10}")
    for n in (8, 16, 32, 64, 128, 256):
        a = wired_cylinder_loop_pgf(n, n)[0]
        b = wired_cylinder_loop_pgf(n, n - 1)[0]
        print(f"{n:5d} {a:14.10f} {a - target:10.2e} {b:14.10f} {b - target:10.2e}")
    print()
    cs = np.array([0.05, 0.1, 0.2, 0.4, 0.8])
    for n in (16, 32, 64):
        r = np.array([curved_cylinder_ratio(n, c) for c in cs])
        slope = np.polyfit(np.log(cs), np.log(r - 1), 1)[0]
        print(f"n={n:3d} ratio-1: " + " ".join(f"{x:.3e}" for x in r - 1) + f"  slope {slope:.3f}")


if __name__ == "__main__":
    main()
