"""U(2)-invariant Yamabe equation on the soliton, solved by double shooting.

For radial phi the equation with lambda = 1 reads

    6 phi'' + 6 a(t) phi' + S(t) phi = phi^3,   a = h''/h' + 3h'/h,

and both ends of [0, beta] are regular singular points (a ~ +-1/distance).
Integration therefore starts a small distance eps inside each end from a
quadratic Taylor seed and the two shots are matched at an interior point.
The profile (h, h') is integrated alongside phi, so the coefficients are
evaluated from the state rather than from the stored interpolant.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (BlowUp, BracketNotFound, InnerBracketFail, InvalidBracket, KCError,
                     NoConvergence)
from .geometry import laplacian_coefficient, scalar_curvature
from .ode import EventSpec, IntegratorConfig, Trajectory, integrate

LAMBDA = 1.0


@dataclass(frozen=True)
class YamabeConfig:
    eps_factor: float = 1e-4  # eps = eps_factor * beta
    t_match_frac: float = 0.5  # t_match = t_match_frac * beta
    integrator: IntegratorConfig = IntegratorConfig()
    blowup_factor: float = 10.0  # |phi| limit in units of sqrt(S(0))
    newton_tol: float = 1e-11
    newton_max_iter: int = 50
    fd_step: float = 1e-7

    def __post_init__(self):
        if not 0 < self.eps_factor < 0.1:
            raise ValueError("eps_factor must lie in (0, 0.1)")
        if not self.eps_factor < self.t_match_frac < 1 - self.eps_factor:
            raise ValueError("t_match must lie strictly between the seed points")


def endpoint_curvatures(profile) -> tuple[float, float]:
    """``(S(0), S(beta))``."""
    return (float(scalar_curvature(profile, 0.0)),
            float(scalar_curvature(profile, profile.beta)))


def yamabe_rhs(t, phi, dphi, profile):
    """phi'' from the Yamabe equation at interior t, coefficients from the profile."""
    a = laplacian_coefficient(profile, t)
    s = scalar_curvature(profile, t)
    return (LAMBDA * phi ** 3 - s * phi) / 6.0 - a * dphi


def seed_left(s0: float, eps: float, s_curv0: float) -> tuple[float, float]:
    """(phi, phi') at t = eps for phi(0) = s0, using 12 phi''(0) = s0 (s0^2 - S(0))."""
    q = s0 * (LAMBDA * s0 * s0 - s_curv0) / 12.0
    return s0 + 0.5 * q * eps * eps, q * eps


def seed_right(s_beta: float, eps: float, s_curv_beta: float) -> tuple[float, float]:
    """(phi, phi') at t = beta - eps, mirrored version of seed_left."""
    q = s_beta * (LAMBDA * s_beta * s_beta - s_curv_beta) / 12.0
    return s_beta + 0.5 * q * eps * eps, -q * eps


def _augmented(c):
    def rhs(t, y):
        h, v, p, dp = y[0], y[1], y[2], y[3]
        hpp = (4.0 - h * h - 4.0 * v * v - c * h * h * v * v) / (2.0 * h)
        a = hpp / v + 3.0 * v / h
        s = 4.0 * c * v * v + 2.0 * c * h * hpp + 4.0
        return (v, hpp, dp, (LAMBDA * p * p * p - s * p) / 6.0 - a * dp)
    return rhs


@dataclass(frozen=True)
class Shot:
    """One seeded integration of (h, h', phi, phi')."""

    side: str  # "left" or "right"
    start_value: float  # phi at the nearby endpoint
    trajectory: Trajectory = field(repr=False)

    @property
    def end(self) -> tuple[float, float]:
        y = self.trajectory.y1
        return float(y[2]), float(y[3])


def shoot(profile, side: str, value: float, t_end: float,
          config: YamabeConfig = YamabeConfig()) -> Shot:
    """Integrate from the seed near one endpoint to ``t_end``.

    Raises BlowUp when |phi| leaves the band 10 sqrt(S(0)).
    """
    beta = profile.beta
    eps = config.eps_factor * beta
    s0, sb = endpoint_curvatures(profile)
    if side == "left":
        t_start = eps
        phi, dphi = seed_left(value, eps, s0)
    elif side == "right":
        t_start = beta - eps
        phi, dphi = seed_right(value, eps, sb)
    else:
        raise ValueError(side)
    h, v = profile.hv(t_start)
    limit = config.blowup_factor * math.sqrt(s0)
    guard = EventSpec(lambda t, y: limit - abs(y[2]), "falling", terminal=True)
    traj = integrate(_augmented(profile.c), (float(h), float(v), phi, dphi), t_start, t_end,
                     config.integrator, events=[guard])
    if traj.terminated:
        raise BlowUp(f"{side} shot from {value} left |phi| <= {limit:.3f} at t={traj.t1:.6f}")
    return Shot(side, float(value), traj)


def t_match_of(profile, config: YamabeConfig) -> float:
    return config.t_match_frac * profile.beta


def shoot_pair(s0: float, s_beta: float, profile,
               config: YamabeConfig = YamabeConfig()) -> tuple[float, float]:
    """(phi_L - phi_R, phi_L' - phi_R') at the matching point."""
    tm = t_match_of(profile, config)
    pl, dl = shoot(profile, "left", s0, tm, config).end
    pr, dr = shoot(profile, "right", s_beta, tm, config).end
    return pl - pr, dl - dr


@dataclass(frozen=True)
class ScanRecord:
    s0: float
    s_beta_matched: float  # nan where no match was found
    miss: float  # nan where no match was found


def _match_right(profile, config, s0, phi_left, lo, hi):
    tm = t_match_of(profile, config)

    def gap(sb):
        return shoot(profile, "right", sb, tm, config).end[0] - phi_left

    try:
        return brentq(gap, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    except (ValueError, KCError) as exc:
        raise InnerBracketFail(f"no s_beta in [{lo}, {hi}] matches s0={s0}") from exc


def scan_point(profile, s0: float, config: YamabeConfig = YamabeConfig(),
               inner_lo: float | None = None) -> ScanRecord:
    """Match phi at t_match over s_beta, then record the slope mismatch."""
    tm = t_match_of(profile, config)
    _, sb_curv = endpoint_curvatures(profile)
    lo = 0.5 * math.sqrt(sb_curv) if inner_lo is None else inner_lo
    try:
        pl, dl = shoot(profile, "left", s0, tm, config).end
        sb = _match_right(profile, config, s0, pl, lo, s0)
        _, dr = shoot(profile, "right", sb, tm, config).end
    except (InnerBracketFail, BlowUp):
        return ScanRecord(float(s0), math.nan, math.nan)
    return ScanRecord(float(s0), float(sb), float(dl - dr))


def _scan_worker(args):
    profile, s0, config, inner_lo = args
    return scan_point(profile, s0, config, inner_lo)


def scan_grid(profile, grid_size: int = 64, delta: float = 1e-3) -> np.ndarray:
    s0_curv, sb_curv = endpoint_curvatures(profile)
    return np.linspace(math.sqrt(sb_curv) + delta, math.sqrt(s0_curv), grid_size)


def uniqueness_scan(profile, grid_size: int = 64, config: YamabeConfig = YamabeConfig(),
                    delta: float = 1e-3, inner_lo: float | None = None,
                    jobs: int = 1) -> list[ScanRecord]:
    """Miss function over s0 in [sqrt S(beta) + delta, sqrt S(0)].

    The inner match searches s_beta on [inner_lo, s0]; ``inner_lo`` defaults
    to sqrt(S(beta))/2 because shots that are not solutions can need values
    below the solution bound.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    tasks = [(profile, float(s), config, inner_lo) for s in scan_grid(profile, grid_size, delta)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_worker, tasks))
    return [_scan_worker(t) for t in tasks]


def sign_change_brackets(records: list[ScanRecord]) -> list[tuple[ScanRecord, ScanRecord]]:
    """Consecutive valid records whose miss values have opposite signs."""
    valid = [r for r in records if math.isfinite(r.miss)]
    out = []
    for a, b in zip(valid, valid[1:]):
        if a.miss == 0.0 or (a.miss > 0) != (b.miss > 0):
            out.append((a, b))
    return out


@dataclass(frozen=True)
class YamabeSolution:
    s0: float
    s_beta: float
    gaps: tuple[float, float]
    iterations: int
    profile: object = field(repr=False)
    config: YamabeConfig = field(repr=False)
    left: Shot = field(repr=False)
    right: Shot = field(repr=False)
    lam: float = LAMBDA

    @property
    def eps(self) -> float:
        return self.config.eps_factor * self.profile.beta

    @property
    def t_match(self) -> float:
        return t_match_of(self.profile, self.config)

    def _pieces(self, t):
        beta, eps = self.profile.beta, self.eps
        s0c, sbc = endpoint_curvatures(self.profile)
        if t < eps:
            q = self.s0 * (self.s0 ** 2 - s0c) / 12.0
            return self.s0 + 0.5 * q * t * t, q * t, q
        if t > beta - eps:
            q = self.s_beta * (self.s_beta ** 2 - sbc) / 12.0
            d = beta - t
            return self.s_beta + 0.5 * q * d * d, -q * d, q
        shot = self.left if t <= self.t_match else self.right
        y = shot.trajectory(t)
        dy = shot.trajectory.derivative(t)
        return y[2], y[3], dy[3]

    def eval(self, t):
        """(phi, phi', phi'') on [0, beta]; phi'' from the interpolant derivative."""
        if np.ndim(t) == 0:
            return tuple(float(x) for x in self._pieces(float(t)))
        rows = np.array([self._pieces(float(s)) for s in np.asarray(t)])
        return rows[:, 0], rows[:, 1], rows[:, 2]

    def samples(self, n: int = 2001) -> np.ndarray:
        """Columns t, phi, phi' on a uniform grid of [0, beta]."""
        t = np.linspace(0.0, self.profile.beta, n)
        phi, dphi, _ = self.eval(t)
        return np.column_stack((t, phi, dphi))

    def interior_grid(self, n: int = 2001) -> np.ndarray:
        return np.linspace(self.eps, self.profile.beta - self.eps, n)

    def residuals(self, t=None) -> np.ndarray:
        """Pointwise 6 a phi' + 6 phi'' + S phi - phi^3 with coefficients from the profile."""
        t = self.interior_grid() if t is None else np.asarray(t, float)
        phi, dphi, ddphi = self.eval(t)
        a = laplacian_coefficient(self.profile, t)
        s = scalar_curvature(self.profile, t)
        return 6.0 * a * dphi + 6.0 * ddphi + s * phi - self.lam * phi ** 3

    @property
    def residual_rms(self) -> float:
        r = self.residuals()
        return float(np.sqrt(np.mean(r * r)))

    def bound_chain(self) -> dict:
        s0c, sbc = endpoint_curvatures(self.profile)
        return {
            "sqrtS_beta<s_beta": math.sqrt(sbc) < self.s_beta,
            "s_beta<s0": self.s_beta < self.s0,
            "s0<sqrtS0": self.s0 < math.sqrt(s0c),
        }

    def endpoint_regularity(self, probe: float = 2.0) -> tuple[float, float]:
        """``12 phi''(end) - phi (phi^2 - S)`` at both ends.

        phi''(end) is fitted from the integrated shot at distance probe*eps:
        ``2 (phi(d) - phi(end)) / d^2``.
        """
        s0c, sbc = endpoint_curvatures(self.profile)
        d = probe * self.eps
        beta = self.profile.beta
        left = 2.0 * (self.left.trajectory(d)[2] - self.s0) / d ** 2
        right = 2.0 * (self.right.trajectory(beta - d)[2] - self.s_beta) / d ** 2
        return (float(12 * left - self.s0 * (self.s0 ** 2 - s0c)),
                float(12 * right - self.s_beta * (self.s_beta ** 2 - sbc)))


def _newton(profile, config, s0, sb):
    tm = t_match_of(profile, config)
    step = config.fd_step
    gaps = (math.inf, math.inf)
    for it in range(1, config.newton_max_iter + 1):
        left = shoot(profile, "left", s0, tm, config)
        right = shoot(profile, "right", sb, tm, config)
        (pl, dl), (pr, dr) = left.end, right.end
        gaps = (pl - pr, dl - dr)
        if max(abs(gaps[0]), abs(gaps[1])) <= config.newton_tol:
            return s0, sb, gaps, it, left, right
        # left data depends on s0 only, right data on s_beta only
        pl2, dl2 = shoot(profile, "left", s0 + step, tm, config).end
        pr2, dr2 = shoot(profile, "right", sb + step, tm, config).end
        jac = np.array([[(pl2 - pl) / step, -(pr2 - pr) / step],
                        [(dl2 - dl) / step, -(dr2 - dr) / step]])
        ds0, dsb = np.linalg.solve(jac, -np.array(gaps))
        s0, sb = s0 + ds0, sb + dsb
        if abs(ds0) < 1e-15 and abs(dsb) < 1e-15:
            # cannot improve further; accept if within the reporting tolerance
            if max(abs(gaps[0]), abs(gaps[1])) <= 1e-9:
                return s0, sb, gaps, it, left, right
            break
    raise NoConvergence(f"Newton stalled after {config.newton_max_iter} iterations, gaps={gaps}")


def solve(profile, config: YamabeConfig = YamabeConfig(), scan: list[ScanRecord] | None = None,
          scan_size: int = 64, jobs: int = 1) -> YamabeSolution:
    """The U(2)-invariant Yamabe solution with lambda = 1.

    A uniqueness scan supplies the sign-change bracket; Newton on the two
    matching gaps (finite-difference Jacobian) polishes it.
    """
    if scan is None:
        scan = uniqueness_scan(profile, scan_size, config, jobs=jobs)
    brackets = sign_change_brackets(scan)
    if not brackets:
        raise BracketNotFound("miss function never changes sign over the scan")
    a, b = brackets[0]
    w = a.miss / (a.miss - b.miss) if a.miss != b.miss else 0.5
    s0 = a.s0 + w * (b.s0 - a.s0)
    sb = a.s_beta_matched + w * (b.s_beta_matched - a.s_beta_matched)
    s0, sb, gaps, it, left, right = _newton(profile, config, s0, sb)
    # the dense solution spans [eps, t_match] and [t_match, beta - eps]
    return YamabeSolution(s0=float(s0), s_beta=float(sb), gaps=gaps, iterations=it,
                          profile=profile, config=config, left=left, right=right)


@dataclass(frozen=True)
class ComparisonReport:
    F0: float
    F2_identity: float  # (v(s0_b) - v(s0_a)) / 12 with v(x) = x^3 - S(0) x
    F2_numeric: float  # from the integrated shots near t = 0
    first_decrease: float | None  # first t where F' < 0, None if never
    F_end: float
    dF_end: float
    t_end: float


def shoot_full(profile, s0: float, config: YamabeConfig = YamabeConfig()) -> Shot | None:
    """Left shot run as far towards beta - eps as it stays bounded; None on immediate blow-up."""
    try:
        return shoot(profile, "left", s0, profile.beta * (1 - config.eps_factor), config)
    except BlowUp:
        return None


def compare_pair(shot_a: Shot, shot_b: Shot, profile, n: int = 2001) -> ComparisonReport:
    """Monotonicity diagnostics of F = phi_b - phi_a for two left shots with s0_a < s0_b."""
    if not shot_a.start_value < shot_b.start_value:
        raise InvalidBracket("compare_pair needs s0_a < s0_b")
    s0c, _ = endpoint_curvatures(profile)

    def v(x):
        return x ** 3 - s0c * x

    ta, tb = shot_a.trajectory, shot_b.trajectory
    t_end = min(ta.t1, tb.t1)
    t = np.linspace(ta.t0, t_end, n)
    ya, yb = ta(t), tb(t)
    dF = yb[:, 3] - ya[:, 3]
    neg = np.nonzero(dF < 0)[0]
    # F(d) - F(0) = F''(0) d^2 / 2 to leading order, probed past the seed point
    d = 3.0 * ta.t0
    f2_num = 2.0 * ((tb(d)[2] - shot_b.start_value) - (ta(d)[2] - shot_a.start_value)) / d ** 2
    return ComparisonReport(
        F0=shot_b.start_value - shot_a.start_value,
        F2_identity=(v(shot_b.start_value) - v(shot_a.start_value)) / 12.0,
        F2_numeric=float(f2_num),
        first_decrease=float(t[neg[0]]) if len(neg) else None,
        F_end=float(yb[-1, 2] - ya[-1, 2]),
        dF_end=float(dF[-1]),
        t_end=float(t_end),
    )

