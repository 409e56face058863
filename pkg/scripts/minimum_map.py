"""Tabulate the first minimum of the profile equation as a function of c.

Writes a CSV (c, beta_c, m_c, miss) suitable for plotting the shooting
function whose zero is the soliton constant; rows where the trajectory never
turns are written with NaN.  Usage: python scripts/minimum_map.py out.csv
"""
import argparse
import math

import numpy as np

from kcyamabe.errors import KCError
from kcyamabe.export import write_csv
from kcyamabe.soliton import SQRT2, SolitonParams, first_minimum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("output")
    ap.add_argument("--c-min", type=float, default=-1.0)
    ap.add_argument("--c-max", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=61)
    args = ap.parse_args()

    rows = []
    for c in np.linspace(args.c_min, args.c_max, args.n):
        try:
            rec = first_minimum(SolitonParams(float(c)))
            rows.append((c, rec.beta_c, rec.m_c, rec.m_c - SQRT2))
        except KCError:
            rows.append((c, math.nan, math.nan, math.nan))
    write_csv(args.output, ("c", "beta_c", "m_c", "miss"), rows)
    ok = [r for r in rows if math.isfinite(r[2])]
    print(f"wrote {len(rows)} rows to {args.output}; {len(ok)} with a first minimum")


if __name__ == "__main__":
    main()
