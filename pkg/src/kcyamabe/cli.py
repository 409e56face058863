"""Command-line front end: ``kcyamabe {find-c0,profile,yamabe,verify}``.

Configuration precedence is defaults < ``--config`` file < flags.  The config
file is flat ``key = value`` (a TOML subset); keys use the long flag names
with dashes or underscores.  Exit codes: 0 success, 1 numerical failure,
2 configuration error.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import geometry as geo
from .checks import run_all
from .errors import KCError
from .export import build_manifest, write_csv, write_json
from .ode import IntegratorConfig
from .soliton import build_profile, cao_function, cao_root, find_c0
from .yamabe import YamabeConfig, sign_change_brackets, solve, uniqueness_scan

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

_COMMON = {"out_dir": "out", "bracket_lo": -0.6, "bracket_hi": -0.4, "tol": 1e-12,
           "rtol": 1e-13, "atol": 1e-15}

DEFAULTS = {
    "find-c0": {**_COMMON, "method": "shoot"},
    "profile": {**_COMMON, "grid": 2001, "c": None, "volume_constant": geo.HOPF_VOLUME},
    "yamabe": {**_COMMON, "grid": 2001, "scan_size": 64, "eps_factor": 1e-4,
               "t_match_frac": 0.5, "yamabe_rtol": 1e-10, "yamabe_atol": 1e-12, "jobs": 1},
    "verify": {"out_dir": "out", "quick": False, "c": None, "scan_size": 64, "jobs": 1},
}


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for k, v in raw.items():
        if isinstance(v, dict):
            raise ConfigError(f"config must be flat; section [{k}] not allowed")
        out[k.replace("-", "_")] = v
    return out


def resolve(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "func")}
    if getattr(args, "config", None):
        file_cfg = _load_config(args.config)
        unknown = set(file_cfg) - set(cfg) - {"bracket"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        if "bracket" in file_cfg:
            cfg["bracket_lo"], cfg["bracket_hi"] = file_cfg.pop("bracket")
        cfg.update(file_cfg)
    if "bracket" in flags:
        cfg["bracket_lo"], cfg["bracket_hi"] = flags.pop("bracket")
    cfg.update(flags)
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    if "bracket_lo" in cfg:
        need(cfg["bracket_lo"] < cfg["bracket_hi"], "bracket must satisfy lo < hi")
    for key in ("tol", "rtol", "atol", "yamabe_rtol", "yamabe_atol", "volume_constant"):
        if key in cfg:
            need(float(cfg[key]) > 0, f"{key} must be positive")
    if "grid" in cfg:
        need(int(cfg["grid"]) >= 3, "grid must have at least 3 points")
    if "scan_size" in cfg:
        need(int(cfg["scan_size"]) >= 2, "scan-size must be >= 2")
    if "eps_factor" in cfg:
        need(0 < cfg["eps_factor"] < 0.1, "eps-factor must lie in (0, 0.1)")
    if "t_match_frac" in cfg:
        need(cfg.get("eps_factor", 0) < cfg["t_match_frac"] < 1 - cfg.get("eps_factor", 0),
             "t-match-frac must lie strictly inside the interval")
    if "jobs" in cfg:
        need(int(cfg["jobs"]) >= 1, "jobs must be >= 1")
    if "method" in cfg:
        need(cfg["method"] in ("shoot", "cao-root"), "method must be shoot or cao-root")


def _integrator(cfg) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=float(cfg["rtol"]), abs_tol=float(cfg["atol"]))


def _c0(cfg) -> float:
    return find_c0((cfg["bracket_lo"], cfg["bracket_hi"]), float(cfg["tol"]),
                   _integrator(cfg)).c0


def _finish(command, cfg, files, started, c0=None, beta=None):
    out = Path(cfg["out_dir"])
    manifest = build_manifest(command, cfg, files, c0=c0, beta=beta,
                              wall_time=round(time.perf_counter() - started, 3),
                              version=__version__)
    write_json(out / f"manifest-{command}.json", manifest)


def cmd_find_c0(cfg) -> int:
    started = time.perf_counter()
    if cfg["method"] == "cao-root":
        c0 = cao_root()
        history = []
    else:
        res = find_c0((cfg["bracket_lo"], cfg["bracket_hi"]), float(cfg["tol"]), _integrator(cfg))
        c0, history = res.c0, res.history
    print(f"c0 = {c0:.16f}")
    print(f"k(c0) = {float(cao_function(c0)):.3e}")
    for c, miss in history:
        print(f"  c = {c:+.16f}  miss = {miss:+.3e}")
    _finish("find-c0", cfg, [], started, c0=c0)
    return EXIT_OK


def cmd_profile(cfg) -> int:
    started = time.perf_counter()
    c = cfg["c"] if cfg["c"] is not None else _c0(cfg)
    profile = build_profile(float(c), _integrator(cfg))
    n = int(cfg["grid"])
    out = Path(cfg["out_dir"])
    f1 = write_csv(out / "profile.csv", ("t", "h", "dh", "d2h", "d3h"), profile.grid(n))
    f2 = write_csv(out / "curvature.csv", geo.CURVATURE_COLUMNS,
                   geo.curvature_table(profile, n, normalization=float(cfg["volume_constant"])))
    print(f"c = {profile.c:.16f}  beta = {profile.beta:.16f}")
    print(f"wrote {f1} and {f2}")
    _finish("profile", cfg, [f1, f2], started, c0=profile.c, beta=profile.beta)
    return EXIT_OK


def cmd_yamabe(cfg) -> int:
    started = time.perf_counter()
    profile = build_profile(_c0(cfg), _integrator(cfg))
    ycfg = YamabeConfig(eps_factor=float(cfg["eps_factor"]),
                        t_match_frac=float(cfg["t_match_frac"]),
                        integrator=IntegratorConfig(rel_tol=float(cfg["yamabe_rtol"]),
                                                    abs_tol=float(cfg["yamabe_atol"])))
    scan = uniqueness_scan(profile, int(cfg["scan_size"]), ycfg, jobs=int(cfg["jobs"]))
    sol = solve(profile, ycfg, scan=scan)

    out = Path(cfg["out_dir"])
    samples = sol.samples(int(cfg["grid"]))
    t = samples[:, 0]
    inside = (t >= sol.eps) & (t <= profile.beta - sol.eps)
    resid = np.full_like(t, np.nan)
    resid[inside] = sol.residuals(t[inside])
    f1 = write_csv(out / "yamabe.csv", ("t", "phi", "dphi", "residual"),
                   np.column_stack((samples, resid)))
    f2 = write_csv(out / "scan.csv", ("s0", "s_beta", "miss"),
                   [(r.s0, r.s_beta_matched, r.miss) for r in scan])
    bounds = sol.bound_chain()
    summary = {
        "c0": profile.c,
        "beta": profile.beta,
        "s0": sol.s0,
        "s_beta": sol.s_beta,
        "gap_value": sol.gaps[0],
        "gap_slope": sol.gaps[1],
        "newton_iterations": sol.iterations,
        "residual_rms": sol.residual_rms,
        "sign_changes": len(sign_change_brackets(scan)),
        "scan_size": len(scan),
        "scan_missing": sum(not math.isfinite(r.miss) for r in scan),
        "lambda": sol.lam,
        **{f"bound_{k}": bool(v) for k, v in bounds.items()},
        "bound_published_interval": bool(1.716 <= sol.s_beta <= sol.s0 <= 2.2483),
    }
    f3 = write_json(out / "summary.json", summary)
    print(f"s0 = {sol.s0:.12f}  s_beta = {sol.s_beta:.12f}  "
          f"residual_rms = {sol.residual_rms:.2e}  sign_changes = {summary['sign_changes']}")
    _finish("yamabe", cfg, [f1, f2, f3], started, c0=profile.c, beta=profile.beta)
    return EXIT_OK


def cmd_verify(cfg) -> int:
    checks = run_all(quick=bool(cfg["quick"]), c=cfg["c"], scan_size=int(cfg["scan_size"]),
                     jobs=int(cfg["jobs"]))
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    failed = [c.name for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kcyamabe", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(sp, shoot=True):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--out-dir", dest="out_dir", default=S)
        if shoot:
            sp.add_argument("--bracket", nargs=2, type=float, metavar=("LO", "HI"), default=S)
            sp.add_argument("--tol", type=float, default=S, help="target |m_c - sqrt2|")
            sp.add_argument("--rtol", type=float, default=S)
            sp.add_argument("--atol", type=float, default=S)

    sp = sub.add_parser("find-c0", help="soliton constant by shooting or Cao's root")
    common(sp)
    sp.add_argument("--method", choices=("shoot", "cao-root"), default=S)
    sp.set_defaults(func=cmd_find_c0)

    sp = sub.add_parser("profile", help="write profile.csv and curvature.csv")
    common(sp)
    sp.add_argument("--grid", type=int, default=S)
    sp.add_argument("--c", type=float, default=S, help="use this constant instead of searching")
    sp.add_argument("--volume-constant", dest="volume_constant", type=float, default=S)
    sp.set_defaults(func=cmd_profile)

    sp = sub.add_parser("yamabe", help="uniqueness scan and Yamabe solution")
    common(sp)
    sp.add_argument("--grid", type=int, default=S)
    sp.add_argument("--scan-size", dest="scan_size", type=int, default=S)
    sp.add_argument("--eps-factor", dest="eps_factor", type=float, default=S)
    sp.add_argument("--t-match-frac", dest="t_match_frac", type=float, default=S)
    sp.add_argument("--yamabe-rtol", dest="yamabe_rtol", type=float, default=S)
    sp.add_argument("--yamabe-atol", dest="yamabe_atol", type=float, default=S)
    sp.add_argument("--jobs", type=int, default=S)
    sp.set_defaults(func=cmd_yamabe)

    sp = sub.add_parser("verify", help="run the invariant suite")
    common(sp, shoot=False)
    sp.add_argument("--quick", action="store_true", default=S)
    sp.add_argument("--c", type=float, default=S, help="constant used in curvature formulas")
    sp.add_argument("--scan-size", dest="scan_size", type=int, default=S)
    sp.add_argument("--jobs", type=int, default=S)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(cfg)
    except KCError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
