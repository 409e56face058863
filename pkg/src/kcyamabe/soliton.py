"""Profile of the U(2)-invariant Koiso-Cao soliton.

The metric is ``dt^2 + f(t)^2 g_fiber + h(t)^2 g_base`` on the principal
orbits, with the Kahler condition ``f = -h h'``.  Everything is driven by the
second-order profile equation

    2 h h'' + 4 h'^2 - 4 + h^2 (1 + c h'^2) = 0,

written below as a first-order system in ``(h, v = h')``.  The orbit interval
starts at t = 0 where h = sqrt(6) is a maximum and ends at the first minimum
t = beta, where h = sqrt(2) exactly when c is the soliton constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryViolation, DegenerateProfile, NoMinimumFound, OutOfDomain
from .ode import EventSpec, IntegratorConfig, Trajectory, integrate
from .rootfind import bisect

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)

#: Published value of the soliton constant, kept as a cross-check only.
REFERENCE_C0 = -0.5276195198969626

#: Integration settings for the canonical profile and the constant search.
TIGHT = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15)

DEFAULT_HORIZON = 50.0


def _check_positive(h):
    if np.any(np.asarray(h) <= 0):
        raise DegenerateProfile("profile height h must stay positive")


def h_second(h, v, c):
    """h'' from the profile equation (closure in terms of h and h')."""
    _check_positive(h)
    return (4.0 - h * h - 4.0 * v * v - c * h * h * v * v) / (2.0 * h)


def soliton_rhs(h, v, c):
    """Right-hand side ``(h', v')`` of the first-order profile system."""
    _check_positive(h)
    return v, 2.0 / h - 2.0 * v * v / h - 0.5 * h * (1.0 + c * v * v)


def h_third(h, v, c):
    """h''' from the differentiated profile equation.

    Written as ``-v (5 h''/h + 1 + c (h h'' + v^2))`` so that it is regular
    where v = 0.
    """
    hpp = h_second(h, v, c)
    return -v * (5.0 * hpp / h + 1.0 + c * (h * hpp + v * v))


def _system(c):
    def rhs(t, y):
        h, v = y[0], y[1]
        if h <= 0:
            raise DegenerateProfile(f"h={h} <= 0 at t={t}")
        return (v, 2.0 / h - 2.0 * v * v / h - 0.5 * h * (1.0 + c * v * v))
    return rhs


@dataclass(frozen=True)
class SolitonParams:
    c: float
    h0: float = SQRT6
    integrator: IntegratorConfig = TIGHT
    horizon: float = DEFAULT_HORIZON


@dataclass(frozen=True)
class MinimumRecord:
    beta_c: float
    m_c: float
    trajectory: Trajectory | None = field(default=None, repr=False, compare=False)


def _minimum_event():
    # h' returns to zero from below; the start point itself (h' = 0) is skipped
    return EventSpec(lambda t, y: y[1], direction="rising", terminal=True)


def first_minimum(params: SolitonParams) -> MinimumRecord:
    """First critical point t > 0 of the solution with h(0) = h0, h'(0) = 0."""
    if params.h0 <= 2.0:
        raise ValueError("h0 must exceed 2 so that t = 0 is a maximum")
    # a trajectory leaving through h -> 0 never reaches a minimum
    floor = EventSpec(lambda t, y: y[0] - 1e-3, direction="falling", terminal=True)
    traj = integrate(_system(params.c), (params.h0, 0.0), 0.0, params.horizon,
                     params.integrator, events=[_minimum_event(), floor])
    hits = traj.event_times(0)
    if not traj.terminated or not hits:
        raise NoMinimumFound(f"no minimum before t={params.horizon} for c={params.c}")
    return MinimumRecord(beta_c=traj.t1, m_c=float(traj.y1[0]), trajectory=traj)


def minimum_miss(c: float, h0: float = SQRT6, integrator: IntegratorConfig = TIGHT) -> float:
    """``m_c - sqrt(2)`` for the profile started at h0."""
    return first_minimum(SolitonParams(c, h0, integrator)).m_c - SQRT2


@dataclass(frozen=True)
class C0Search:
    c0: float
    miss: float
    history: list  # (c, miss) evaluations in order


def find_c0(bracket: tuple[float, float] = (-0.6, -0.4), target_tol: float = 1e-12,
            integrator: IntegratorConfig = TIGHT) -> C0Search:
    """Soliton constant by bisection on c -> m_c - sqrt(2).

    The endpoint misses must have opposite signs (InvalidBracket otherwise).
    """
    lo, hi = bracket
    history: list = []
    c0 = bisect(lambda c: minimum_miss(c, integrator=integrator), lo, hi,
                xtol=1e-15, ftol=target_tol, history=history)
    return C0Search(c0=c0, miss=minimum_miss(c0, integrator=integrator), history=history)


def cao_function(x):
    """Cao's characterisation of the soliton constant: its nonzero root."""
    return np.exp(2 * x) * (2 - 4 * x + 3 * x * x) - 2 + x * x


def cao_root(bracket: tuple[float, float] = (-1.0, -0.4)) -> float:
    """Nonzero root of ``cao_function`` in (-1, 0); x = 0 is excluded by the bracket."""
    lo, hi = bracket
    if not (lo < hi < 0):
        raise ValueError("bracket must lie strictly left of the trivial root x = 0")
    return bisect(lambda x: float(cao_function(x)), lo, hi, xtol=0.0)


@dataclass(frozen=True)
class SolitonProfile:
    """Solved profile on [0, beta].

    ``h`` and ``h'`` come from the dense interpolant; ``h''`` and ``h'''`` from
    the closed-form closures so that curvature formulas stay consistent with
    the ODE.
    """

    c: float
    beta: float
    trajectory: Trajectory = field(repr=False, compare=False)

    def _domain(self, t):
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, self.beta)
        if np.any(t < -slack) or np.any(t > self.beta + slack):
            raise OutOfDomain(f"t outside [0, {self.beta}]")
        return np.clip(t, 0.0, self.beta)

    def hv(self, t):
        t = self._domain(t)
        s = self.trajectory(t)
        return (s[..., 0], s[..., 1])

    def eval(self, t):
        """``(h, h', h'', h''')`` at t (scalar or array)."""
        h, v = self.hv(t)
        return h, v, h_second(h, v, self.c), h_third(h, v, self.c)

    def grid(self, n: int = 2001) -> np.ndarray:
        """Uniform samples; columns t, h, h', h'', h'''."""
        t = np.linspace(0.0, self.beta, n)
        return np.column_stack((t, *self.eval(t)))

    def boundary_report(self) -> dict:
        h0, v0, a0, _ = self.eval(0.0)
        hb, vb, ab, _ = self.eval(self.beta)
        return {
            "h(0)-sqrt6": float(h0 - SQRT6),
            "h(beta)-sqrt2": float(hb - SQRT2),
            "h'(beta)": float(vb),
            "h(0)h''(0)+1": float(h0 * a0 + 1.0),
            "h(beta)h''(beta)-1": float(hb * ab - 1.0),
        }


def build_profile(c: float, integrator: IntegratorConfig = TIGHT, strict: bool = True,
                  tol: float = 1e-6, horizon: float = DEFAULT_HORIZON) -> SolitonProfile:
    """Integrate from (sqrt 6, 0) to the first minimum and wrap the result.

    With ``strict`` a BoundaryViolation is raised when any endpoint condition
    misses by more than ``tol``.
    """
    rec = first_minimum(SolitonParams(c, SQRT6, integrator, horizon))
    profile = SolitonProfile(c=float(c), beta=rec.beta_c, trajectory=rec.trajectory)
    if strict:
        bad = {k: v for k, v in profile.boundary_report().items() if abs(v) > tol}
        if bad:
            raise BoundaryViolation(f"endpoint conditions violated for c={c}: {bad}", bad)
    return profile


def canonical_profile(bracket: tuple[float, float] = (-0.6, -0.4),
                      integrator: IntegratorConfig = TIGHT) -> SolitonProfile:
    """Profile at the constant found by shooting."""
    return build_profile(find_c0(bracket, integrator=integrator).c0, integrator)
