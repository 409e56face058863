"""Metric quantities along the soliton profile.

All functions accept a scalar ``t`` or an array of times in [0, beta].  The
Laplacian follows the geometers' sign convention (non-negative spectrum):

    Delta psi = -psi'' - a(t) psi',    a = h''/h' + 3 h'/h,

which is the opposite sign of most numerical libraries.

Functions taking an optional ``c`` evaluate the soliton potential (and the
curvature formulas derived through it) with that constant instead of the
profile's own; this is how mismatched-constant negative controls are run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import EndpointSingularity, NonPositiveTestFunction
from .soliton import SolitonProfile

#: Default orbit volume constant; only ratios are meaningful downstream.
HOPF_VOLUME = 8.0 * math.pi ** 2

YAMABE_A4 = 6.0  # 4(n-1)/(n-2) for n = 4
YAMABE_P = 4.0  # 2n/(n-2)

FD_STEP = 1e-4
SINGULAR_SLOPE = 1e-12


def _c(profile, c):
    return profile.c if c is None else c


def warp_f(profile: SolitonProfile, t):
    h, v = profile.hv(t)
    return -h * v


def warp_df(profile: SolitonProfile, t):
    h, v, hpp, _ = profile.eval(t)
    return -(v * v + h * hpp)


def warp_ddf(profile: SolitonProfile, t):
    h, v, hpp, hppp = profile.eval(t)
    return -(3.0 * v * hpp + h * hppp)


def warp_ddf_fd(profile: SolitonProfile, t, step: float = FD_STEP):
    """Centered difference of the closed-form f'; only for interior t."""
    t = np.asarray(t, dtype=float)
    return (warp_df(profile, t + step) - warp_df(profile, t - step)) / (2.0 * step)


def potential_u(profile: SolitonProfile, t, c=None):
    h, _ = profile.hv(t)
    return -_c(profile, c) * h * h / 2.0


def potential_du(profile: SolitonProfile, t, c=None):
    h, v = profile.hv(t)
    return -_c(profile, c) * h * v


def potential_ddu(profile: SolitonProfile, t, c=None):
    h, v, hpp, _ = profile.eval(t)
    return -_c(profile, c) * (v * v + h * hpp)


def ricci_components(profile: SolitonProfile, t, c=None):
    """``(Ric(H,H), Ric(Y/h,Y/h))`` in their soliton-simplified form.

    Ric(X/f, X/f) equals the first and Ric(Z/h, Z/h) the second.
    """
    h, v, hpp, _ = profile.eval(t)
    c = _c(profile, c)
    return 1.0 + c * (h * hpp + v * v), 1.0 + c * v * v


def ricci_raw(profile: SolitonProfile, t, fpp=None):
    """Ricci diagonal ``(H, X/f, Y/h)`` straight from the warped-product formulas.

    Needs f > 0, so interior points only.  ``fpp`` overrides the closed-form f''.
    """
    h, v, hpp, _ = profile.eval(t)
    f = -h * v
    if np.any(np.abs(f) < SINGULAR_SLOPE):
        raise EndpointSingularity("raw Ricci formulas divide by f")
    fp = -(v * v + h * hpp)
    fpp = warp_ddf(profile, t) if fpp is None else fpp
    ric_h = -fpp / f - 2.0 * hpp / h
    ric_x = -fpp / f - 2.0 * fp * v / (f * h) + 2.0 * f * f / h ** 4
    ric_y = (-hpp / h - fp * v / (f * h) - v * v / (h * h) + 4.0 / (h * h)
             - 2.0 * f * f / h ** 4)
    return ric_h, ric_x, ric_y


def scalar_curvature(profile: SolitonProfile, t, c=None):
    h, v, hpp, _ = profile.eval(t)
    c = _c(profile, c)
    return 4.0 * c * v * v + 2.0 * c * h * hpp + 4.0


def scalar_derivative(profile: SolitonProfile, t, c=None):
    h, v, hpp, hppp = profile.eval(t)
    c = _c(profile, c)
    return 10.0 * c * v * hpp + 2.0 * c * h * hppp


def laplacian_coefficient(profile: SolitonProfile, t):
    """Drift ``a(t) = h''/h' + 3h'/h``; singular like +-1/distance at the ends."""
    h, v, hpp, _ = profile.eval(t)
    if np.any(np.abs(v) < SINGULAR_SLOPE):
        raise EndpointSingularity("h' vanishes: t is (numerically) an endpoint")
    return hpp / v + 3.0 * v / h


def laplacian(profile: SolitonProfile, t, dpsi, ddpsi):
    return -dpsi * laplacian_coefficient(profile, t) - ddpsi


def soliton_residual(profile: SolitonProfile, t, c=None, step: float = FD_STEP):
    """Residuals of Ric + Hess(u) - g = 0 at interior t.

    ``trace_residual`` is ``S - Delta u - 4`` with S summed from the raw
    Ricci formulas (closed-form f'') and Delta u from the potential, so it
    vanishes only when the metric really is a soliton with constant c.
    ``hessian_residual`` is the largest of the four diagonal components,
    using a finite-difference f''.
    """
    c = _c(profile, c)
    h, v = profile.hv(t)
    du = potential_du(profile, t, c)
    ddu = potential_ddu(profile, t, c)
    f = -h * v
    fp = warp_df(profile, t)

    rh, rx, ry = ricci_raw(profile, t)
    s_raw = rh + rx + 2.0 * ry
    lap_u = laplacian(profile, t, du, ddu)
    trace = s_raw - lap_u - 4.0

    rh, rx, ry = ricci_raw(profile, t, fpp=warp_ddf_fd(profile, t, step))
    comps = np.stack([
        rh + ddu - 1.0,
        rx + fp * du / f - 1.0,
        ry + v * du / h - 1.0,
    ])
    return trace, np.max(np.abs(comps), axis=0)


def volume_weight(profile: SolitonProfile, t, normalization: float = HOPF_VOLUME):
    """Orbit volume density ``normalization * f h^2``."""
    h, v = profile.hv(t)
    return normalization * (-h * v) * h * h


def total_volume(profile: SolitonProfile, n: int = 2001, normalization: float = HOPF_VOLUME):
    t = np.linspace(0.0, profile.beta, n)
    return float(simpson(volume_weight(profile, t, normalization), x=t))


@dataclass(frozen=True)
class CurvatureSample:
    t: float
    ric_H: float
    ric_Y: float
    S: float
    dS: float


def curvature_sample(profile: SolitonProfile, t: float, c=None) -> CurvatureSample:
    rh, ry = ricci_components(profile, t, c)
    return CurvatureSample(float(t), float(rh), float(ry),
                           float(scalar_curvature(profile, t, c)),
                           float(scalar_derivative(profile, t, c)))


CURVATURE_COLUMNS = ("t", "f", "u", "ric_H", "ric_Y", "S", "dS", "w")


def curvature_table(profile: SolitonProfile, n: int = 2001, c=None,
                    normalization: float = HOPF_VOLUME) -> np.ndarray:
    """Columns as in CURVATURE_COLUMNS on a uniform grid of n points."""
    t = np.linspace(0.0, profile.beta, n)
    rh, ry = ricci_components(profile, t, c)
    return np.column_stack((
        t, warp_f(profile, t), potential_u(profile, t, c), rh, ry,
        scalar_curvature(profile, t, c), scalar_derivative(profile, t, c),
        volume_weight(profile, t, normalization),
    ))


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a U(2)-invariant function psi(t) on a grid covering [0, beta]."""

    t: np.ndarray
    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray | None = None

    @classmethod
    def from_callable(cls, profile: SolitonProfile, fn, dfn, n: int = 2001):
        t = np.linspace(0.0, profile.beta, n)
        return cls(t, np.asarray(fn(t), float) * np.ones_like(t),
                   np.asarray(dfn(t), float) * np.ones_like(t))

    @classmethod
    def constant(cls, profile: SolitonProfile, value: float = 1.0, n: int = 2001):
        t = np.linspace(0.0, profile.beta, n)
        return cls(t, np.full_like(t, value), np.zeros_like(t), np.zeros_like(t))

    def scaled(self, k: float) -> "RadialFunction":
        return RadialFunction(self.t, k * self.value, k * self.d1,
                              None if self.d2 is None else k * self.d2)

    def endpoint_slopes(self) -> tuple[float, float]:
        return float(self.d1[0]), float(self.d1[-1])


def yamabe_quotient(profile: SolitonProfile, phi: RadialFunction, c=None,
                    normalization: float = HOPF_VOLUME) -> float:
    """Yamabe functional of a radial test function (n = 4, a = 6, p = 4).

    ``[int (6 phi'^2 + S phi^2) w dt] / [int phi^4 w dt]^(1/2)`` by composite
    Simpson on the samples of ``phi``.
    """
    if np.any(phi.value <= 0):
        raise NonPositiveTestFunction("Yamabe quotient needs phi > 0")
    t = phi.t
    w = volume_weight(profile, t, normalization)
    s = scalar_curvature(profile, t, c)
    num = simpson((YAMABE_A4 * phi.d1 ** 2 + s * phi.value ** 2) * w, x=t)
    den = simpson(phi.value ** YAMABE_P * w, x=t)
    return float(num / den ** (2.0 / YAMABE_P))
