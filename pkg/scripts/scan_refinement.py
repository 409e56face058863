"""Uniqueness scan at increasing resolution.

Prints, for each grid size, the number of sign changes of the miss function
and the bracket that contains the root, followed by the Newton-polished
solution.  Usage: python scripts/scan_refinement.py [--jobs N]
"""
import argparse

from kcyamabe.soliton import canonical_profile
from kcyamabe.yamabe import sign_change_brackets, solve, uniqueness_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    profile = canonical_profile()
    scan = None
    print(f"{'size':>5}  {'changes':>7}  bracket")
    for n in args.sizes:
        scan = uniqueness_scan(profile, n, jobs=args.jobs)
        brackets = sign_change_brackets(scan)
        desc = ", ".join(f"[{a.s0:.8f}, {b.s0:.8f}]" for a, b in brackets)
        print(f"{n:>5}  {len(brackets):>7}  {desc}")
    sol = solve(profile, scan=scan)
    print(f"phi(0)    = {sol.s0:.12f}")
    print(f"phi(beta) = {sol.s_beta:.12f}")
    print(f"gaps      = {sol.gaps[0]:.2e}, {sol.gaps[1]:.2e}  ({sol.iterations} Newton steps)")


if __name__ == "__main__":
    main()
