"""Cylinder approximation ratio and short-return sum along an n grid (ternary map).

Usage: python3 scripts/rho_and_returns.py [--tau-lo 1] [--tau-hi 2]
"""
import argparse

from cantor_extremes.geometry import rho_ratio, short_return_sum
from cantor_extremes.map_core import TERNARY
from cantor_extremes.observable import default_scales, first_level


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tau-lo", default="1")
    ap.add_argument("--tau-hi", default="2")
    ap.add_argument("--n", type=int, nargs="+", default=[10**3, 2 * 10**3, 4 * 10**3, 10**4, 10**5, 10**6])
    args = ap.parse_args(argv)

    print(f"{'n':>8s} {'j':>3s} {'rho':>12s} {'short_return':>14s}")
    for n in args.n:
        sc = default_scales(n, args.tau_lo, 0.5)
        j = first_level(sc, TERNARY)
        rho = rho_ratio(sc, args.tau_lo, args.tau_hi, TERNARY)
        sr = short_return_sum(sc, args.tau_lo, args.tau_hi, TERNARY, min(2 * j, sc.r_n))
        flag = " (coarsened)" if sr.coarsened else ""
        print(f"{n:8d} {j:3d} {float(rho):12.4e} {sr.value:14.6e}{flag}")


if __name__ == "__main__":
    main()
