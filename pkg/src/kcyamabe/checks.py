"""Invariant suite behind ``kcyamabe verify``."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import geometry as geo
from .errors import KCError
from .ode import EventSpec, IntegratorConfig, convergence_order, integrate
from .soliton import (REFERENCE_C0, SQRT2, SQRT6, SolitonParams, build_profile, cao_root,
                      find_c0, first_minimum)
from .yamabe import YamabeConfig, sign_change_brackets, solve, uniqueness_scan


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _oscillator(t, y):
    return (y[1], -y[0])


def ode_checks() -> list[Check]:
    out = []
    est = convergence_order(_oscillator, (1.0, 0.0), (0.0, 2 * math.pi), (1.0, 0.0))
    out.append(Check("ode.rk4_order", est.order >= 3.8, f"order={est.order:.4f}"))

    cfg = IntegratorConfig()
    fwd = integrate(_oscillator, (1.0, 0.0), 0.0, 5.0, cfg)
    back = integrate(_oscillator, fwd.y1, 5.0, 0.0, cfg)
    err = float(np.max(np.abs(back.y1 - [1.0, 0.0])))
    bound = 10 * (cfg.rel_tol * 1.0 + cfg.abs_tol)
    out.append(Check("ode.time_reversal", err <= bound, f"err={err:.2e} bound={bound:.2e}"))

    ev = EventSpec(lambda t, y: y[0] - 0.5, "falling", terminal=True)
    tr = integrate(lambda t, y: (-y[0],), (1.0,), 0.0, 5.0, cfg, events=[ev])
    d = abs(tr.t1 - math.log(2))
    out.append(Check("ode.event_ln2", d <= 1e-9, f"|t-ln2|={d:.2e}"))
    return out


def soliton_checks(c0: float, profile) -> list[Check]:
    out = []
    d_ref = abs(c0 - REFERENCE_C0)
    out.append(Check("soliton.c0_reference", d_ref <= 1e-9, f"|c0-ref|={d_ref:.2e}"))
    d_cao = abs(c0 - cao_root())
    out.append(Check("soliton.c0_cao_root", d_cao <= 1e-8, f"|c0-x*|={d_cao:.2e}"))
    rep = profile.boundary_report()
    out.append(Check("soliton.h_beta_sqrt2", abs(rep["h(beta)-sqrt2"]) <= 1e-8,
                     f"{rep['h(beta)-sqrt2']:.2e}"))
    left, right = rep["h(0)h''(0)+1"], rep["h(beta)h''(beta)-1"]
    out.append(Check("soliton.endpoint_hh''", max(abs(left), abs(right)) <= 1e-6,
                     f"{left:.2e}, {right:.2e}"))
    g = profile.grid(2001)
    h, v = g[:, 1], g[:, 2]
    ok = bool(np.all(h > SQRT2 - 1e-9) and np.all(h <= SQRT6 + 1e-12) and np.all(v[1:-1] < 0))
    out.append(Check("soliton.h_range_monotone", ok, f"min h={h.min():.10f}"))
    cs = np.linspace(c0 - 0.05, c0 + 0.05, 5)
    ms = [first_minimum(SolitonParams(c)).m_c for c in cs]
    out.append(Check("soliton.min_monotone_in_c", bool(np.all(np.diff(ms) < 0)),
                     "m_c decreasing in c"))
    return out


def geometry_checks(profile, c=None, n: int = 2001) -> list[Check]:
    out = []
    t = np.linspace(0.0, profile.beta, n)
    s = geo.scalar_curvature(profile, t, c)
    out.append(Check("geometry.S0", bool(abs(s[0] - 5.0552) <= 5e-4), f"S(0)={s[0]:.6f}"))
    out.append(Check("geometry.S_beta", bool(abs(s[-1] - 2.9447) <= 5e-4), f"S(beta)={s[-1]:.6f}"))
    out.append(Check("geometry.S_sum_8", bool(abs(s[0] + s[-1] - 8) <= 1e-10),
                     f"{s[0] + s[-1] - 8:.2e}"))
    rh, ry = geo.ricci_components(profile, t, c)
    out.append(Check("geometry.ricci_positive", bool(rh.min() > 0 and ry.min() > 0),
                     f"min ric_H={rh.min():.4f} ric_Y={ry.min():.4f}"))
    fp = geo.warp_df(profile, t)
    ok = bool(np.all(fp[:-1] > -1.0) and abs(fp[-1] + 1.0) <= 1e-6)
    out.append(Check("geometry.f'_gt_-1", ok, f"min f'(t<beta)+1={(fp[:-1] + 1).min():.2e}"))
    out.append(Check("geometry.S_decreasing", bool(np.all(np.diff(s) < 0)),
                     f"max dS step={np.diff(s).max():.2e}"))
    ds = geo.scalar_derivative(profile, t, c)
    ok = bool(np.all(ds[1:-1] < 0) and abs(ds[0]) < 1e-10 and abs(ds[-1]) < 1e-6)
    out.append(Check("geometry.dS_nonpositive", ok, f"max interior dS={ds[1:-1].max():.2e}"))
    tr, hs = geo.soliton_residual(profile, t[1:-1], c)
    out.append(Check("geometry.trace_identity", float(np.abs(tr).max()) <= 1e-8,
                     f"max|S-Lu-4|={np.abs(tr).max():.2e}"))
    out.append(Check("geometry.soliton_equation", float(hs.max()) <= 1e-5,
                     f"max component={hs.max():.2e}"))
    return out


def yamabe_checks(profile, config: YamabeConfig = YamabeConfig(), scan_size: int = 64,
                  jobs: int = 1) -> list[Check]:
    out = []
    scan = uniqueness_scan(profile, scan_size, config, jobs=jobs)
    n_changes = len(sign_change_brackets(scan))
    out.append(Check("yamabe.single_sign_change", n_changes == 1, f"sign changes={n_changes}"))
    sol = solve(profile, config, scan=scan)
    gap = max(abs(g) for g in sol.gaps)
    out.append(Check("yamabe.gaps", gap <= 1e-9, f"max gap={gap:.2e}"))
    rms = sol.residual_rms
    out.append(Check("yamabe.residual_rms", rms <= 1e-6, f"rms={rms:.2e}"))
    ok = 1.716 <= sol.s_beta < sol.s0 <= 2.2483 and all(sol.bound_chain().values())
    out.append(Check("yamabe.bound_chain", ok, f"s0={sol.s0:.8f} s_beta={sol.s_beta:.8f}"))
    dphi = sol.samples()[1:-1, 2]
    out.append(Check("yamabe.decreasing", bool(dphi.max() < 0), f"max phi'={dphi.max():.2e}"))
    left, right = sol.endpoint_regularity()
    out.append(Check("yamabe.endpoint_identity", max(abs(left), abs(right)) <= 1e-5,
                     f"{left:.2e}, {right:.2e}"))
    alt = [solve(profile, replace(config, eps_factor=config.eps_factor / 2), scan=scan),
           solve(profile, replace(config, t_match_frac=1 / 3), scan=scan)]
    shift = max(max(abs(a.s0 - sol.s0), abs(a.s_beta - sol.s_beta)) for a in alt)
    out.append(Check("yamabe.knob_insensitive", shift <= 1e-7, f"shift={shift:.2e}"))
    phi = geo.RadialFunction(*sol.samples().T)
    y1, y2 = geo.yamabe_quotient(profile, phi), geo.yamabe_quotient(profile, phi.scaled(2.0))
    out.append(Check("yamabe.quotient_scale_invariant", abs(y2 - y1) <= 1e-10 * abs(y1),
                     f"Y={y1:.8f}"))
    return out


def run_all(quick: bool = False, c=None, scan_size: int = 64, jobs: int = 1) -> list[Check]:
    """Every check; ``c`` overrides the soliton constant used in the curvature formulas."""
    checks = ode_checks()
    try:
        c0 = find_c0().c0
        profile = build_profile(c0)
    except KCError as exc:
        return checks + [Check("soliton.profile", False, str(exc))]
    checks += soliton_checks(c0, profile)
    checks += geometry_checks(profile, c)
    if not quick:
        try:
            checks += yamabe_checks(profile, scan_size=scan_size, jobs=jobs)
        except KCError as exc:
            checks.append(Check("yamabe.solve", False, f"{type(exc).__name__}: {exc}"))
    return checks
