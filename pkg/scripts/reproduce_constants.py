"""Recompute the headline constants of the soliton and its curvature.

Usage: python scripts/reproduce_constants.py
"""
import math

import numpy as np

from kcyamabe import geometry as geo
from kcyamabe.soliton import REFERENCE_C0, build_profile, cao_function, cao_root, find_c0


def main():
    search = find_c0()
    x = cao_root()
    profile = build_profile(search.c0)
    t = np.linspace(0.0, profile.beta, 2001)
    s = geo.scalar_curvature(profile, t)
    rh, ry = geo.ricci_components(profile, t)
    rows = [
        ("c0 (shooting)", f"{search.c0:.16f}"),
        ("c0 (root of k)", f"{x:.16f}"),
        ("c0 reference", f"{REFERENCE_C0:.16f}"),
        ("k(c0)", f"{float(cao_function(search.c0)):.3e}"),
        ("bisection steps", str(len(search.history))),
        ("beta", f"{profile.beta:.14f}"),
        ("S(0)", f"{s[0]:.6f}"),
        ("S(beta)", f"{s[-1]:.6f}"),
        ("sqrt S(0)", f"{math.sqrt(s[0]):.6f}"),
        ("sqrt S(beta)", f"{math.sqrt(s[-1]):.6f}"),
        ("sqrt(S(0)/3)", f"{math.sqrt(s[0] / 3):.6f}"),
        ("min Ric(H,H)", f"{rh.min():.6f}"),
        ("min Ric(Y,Y)", f"{ry.min():.6f}"),
        ("volume / 8pi^2", f"{geo.total_volume(profile, normalization=1.0):.12f}"),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")


if __name__ == "__main__":
    main()
