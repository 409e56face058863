"""Sensitivity of the Yamabe solution to integrator tolerance and seed distance.

Usage: python scripts/convergence_study.py
"""
from dataclasses import replace

from kcyamabe.ode import IntegratorConfig
from kcyamabe.soliton import canonical_profile
from kcyamabe.yamabe import YamabeConfig, solve, uniqueness_scan


def main():
    profile = canonical_profile()
    scan = uniqueness_scan(profile, 64)
    base = YamabeConfig()
    ref = solve(profile, base, scan=scan)

    print("integrator tolerance sweep")
    print(f"{'rtol':>8}  {'residual_rms':>12}  {'|d phi(0)|':>10}  {'|d phi(beta)|':>13}")
    for rtol in (1e-7, 1e-8, 1e-9, 1e-10, 1e-11):
        cfg = replace(base, integrator=IntegratorConfig(rtol, rtol * 1e-2))
        sol = solve(profile, cfg, scan=scan)
        print(f"{rtol:8.0e}  {sol.residual_rms:12.3e}  {abs(sol.s0 - ref.s0):10.2e}  "
              f"{abs(sol.s_beta - ref.s_beta):13.2e}")

    print("\nseed distance sweep (eps = factor * beta)")
    print(f"{'factor':>8}  {'|d phi(0)|':>10}  {'|d phi(beta)|':>13}  endpoint identities")
    for factor in (1e-2, 1e-3, 1e-4, 5e-5, 1e-5):
        sol = solve(profile, replace(base, eps_factor=factor), scan=scan)
        left, right = sol.endpoint_regularity()
        print(f"{factor:8.0e}  {abs(sol.s0 - ref.s0):10.2e}  {abs(sol.s_beta - ref.s_beta):13.2e}"
              f"  {left:+.2e} {right:+.2e}")


if __name__ == "__main__":
    main()
