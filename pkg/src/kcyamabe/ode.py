"""Explicit Runge-Kutta integration with adaptive steps, dense output and events.

The adaptive scheme is the Dormand-Prince 5(4) pair with local extrapolation
and its free quartic continuous extension.  A classical fixed-step RK4 is kept
alongside for order checks.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import MaxStepsExceeded, NoSignChange, NonFiniteState, StepUnderflow

Rhs = Callable[[float, np.ndarray], Sequence[float]]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# b - b_hat, padded with the FSAL stage
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# coefficients of theta, theta^2, theta^3, theta^4 in the continuous extension
_P = np.array([
    [1.0, -2.8535800653862835, 3.0717434641059005, -1.1270175653862835],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 4.023133379230305, -6.249321565289, 2.675424484351598],
    [0.0, -3.7324019615885042, 10.068970589843675, -5.685526961588504],
    [0.0, 2.5548038301849423, -6.399112377351017, 3.5219323679207912],
    [0.0, -1.3744241142186024, 3.272657752246729, -1.7672812570757455],
    [0.0, 1.3824689317781436, -3.764937863556287, 2.382468931778144],
])
_ORDER = 5

_DIRECTIONS = {"any": 0, "rising": 1, "falling": -1}


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    min_step: float = 1e-14
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.min_step <= self.max_step):
            raise ValueError("need 0 < min_step <= max_step")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def scaled(self, factor: float) -> "IntegratorConfig":
        """Copy with both tolerances multiplied by `factor`."""
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


@dataclass(frozen=True)
class EventSpec:
    """Sign change of ``indicator(t, y)``.

    ``direction`` is one of ``"any"``, ``"rising"`` (negative to non-negative)
    or ``"falling"``.  A terminal event stops the integration.
    """

    indicator: Callable[[float, np.ndarray], float]
    direction: str = "any"
    terminal: bool = False

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"unknown event direction {self.direction!r}")

    def crosses(self, g_old: float, g_new: float) -> bool:
        if g_old == 0.0 or g_old * g_new > 0.0:
            return False
        d = _DIRECTIONS[self.direction]
        return d == 0 or (d > 0) == (g_new > g_old)


@dataclass(frozen=True)
class EventRecord:
    t: float
    y: np.ndarray
    index: int  # position of the event in the list passed to integrate()


@dataclass
class Trajectory:
    """Accepted steps of an integration plus their dense interpolants."""

    times: np.ndarray
    states: np.ndarray
    # per segment: start time, full step length, interpolation matrix (d, 4)
    seg_t: np.ndarray
    seg_h: np.ndarray
    seg_q: np.ndarray
    events: list = field(default_factory=list)
    terminated: bool = False
    abs_tol: float = 1e-12

    def __post_init__(self):
        self._forward = self.times[-1] >= self.times[0]
        # bisect needs ascending keys
        self._keys = list(self.times[:-1]) if self._forward else list(-self.times[:-1])

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t1(self) -> float:
        return float(self.times[-1])

    @property
    def y1(self) -> np.ndarray:
        return self.states[-1]

    def _segment(self, t: float) -> int:
        lo, hi = min(self.t0, self.t1), max(self.t0, self.t1)
        span = hi - lo
        if t < lo - 1e-12 * max(1.0, span) or t > hi + 1e-12 * max(1.0, span):
            raise ValueError(f"t={t!r} outside trajectory span [{lo}, {hi}]")
        key = t if self._forward else -t
        i = bisect_right(self._keys, key) - 1
        return min(max(i, 0), len(self._keys) - 1)

    def _eval(self, t: float, deriv: bool) -> np.ndarray:
        i = self._segment(t)
        h = self.seg_h[i]
        th = (t - self.seg_t[i]) / h
        q = self.seg_q[i]
        if deriv:
            return q @ np.array([1.0, 2 * th, 3 * th * th, 4 * th ** 3])
        return self.states[i] + h * (q @ np.array([th, th * th, th ** 3, th ** 4]))

    def __call__(self, t):
        """State at ``t`` from the dense interpolant; ``t`` may be an array."""
        if np.ndim(t) == 0:
            return self._eval(float(t), False)
        return np.array([self._eval(float(s), False) for s in np.asarray(t)])

    def derivative(self, t):
        """Time derivative of the interpolant."""
        if np.ndim(t) == 0:
            return self._eval(float(t), True)
        return np.array([self._eval(float(s), True) for s in np.asarray(t)])

    def event_times(self, index: int | None = None) -> list[float]:
        return [e.t for e in self.events if index is None or e.index == index]


def _initial_step(rhs, t0, y0, f0, direction, order, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * direction * f0
    f1 = np.asarray(rhs(t0 + h0 * direction, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / (order + 1))
    return min(100 * h0, h1)


def _bisect_in_segment(event, traj_eval, ta, tb, ga, atol):
    """Shrink [ta, tb] (ga = indicator at ta) until |g| <= atol."""
    tm, ym, gm = tb, None, None
    for _ in range(200):
        tm = 0.5 * (ta + tb)
        if tm == ta or tm == tb:
            break
        ym = traj_eval(tm)
        gm = event.indicator(tm, ym)
        if abs(gm) <= atol:
            return tm, ym
        if (gm > 0) == (ga > 0):
            ta, ga = tm, gm
        else:
            tb = tm
    ym = traj_eval(tb)
    return tb, ym


def integrate(rhs: Rhs, y0, t0: float, t1: float, config: IntegratorConfig | None = None,
              events: Sequence[EventSpec] = ()) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1`` (either direction).

    Stops early at the first terminal event.  Raises StepUnderflow,
    MaxStepsExceeded or NonFiniteState on failure.
    """
    cfg = config or IntegratorConfig()
    if t0 == t1:
        raise ValueError("t0 == t1")
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    direction = 1.0 if t1 > t0 else -1.0
    y = np.array(y0, dtype=float)
    f = np.asarray(rhs(t0, y), dtype=float)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
        raise NonFiniteState(f"non-finite state or slope at t={t0}")

    h_abs = min(_initial_step(rhs, t0, y, f, direction, _ORDER, rtol, atol),
                cfg.max_step, abs(t1 - t0))
    h_abs = max(h_abs, cfg.min_step)
    d = y.size
    K = np.empty((7, d))
    times, states = [t0], [y.copy()]
    seg_t, seg_h, seg_q = [], [], []
    g_old = [ev.indicator(t0, y) for ev in events]
    found: list[EventRecord] = []
    terminated = False
    t = t0
    steps = 0

    while direction * (t1 - t) > 0:
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"{cfg.max_steps} steps reached at t={t}")
        steps += 1
        rejected = False
        while True:
            if h_abs < cfg.min_step:
                raise StepUnderflow(f"step {h_abs:.3e} below min_step at t={t}")
            h = h_abs * direction
            t_new = t + h
            if direction * (t_new - t1) > 0:
                t_new = t1
                h = t_new - t
                h_abs = abs(h)
            K[0] = f
            for i in range(1, 6):
                K[i] = rhs(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
            y_new = y + h * (_B @ K[:6])
            K[6] = rhs(t_new, y_new)
            if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y_new))):
                if h_abs * 0.2 < cfg.min_step:
                    raise NonFiniteState(f"non-finite state near t={t}")
                h_abs *= 0.2
                rejected = True
                continue
            scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
            err = math.sqrt(float(np.mean((h * (K.T @ _E) / scale) ** 2)))
            if err <= 1.0:
                if err == 0.0:
                    factor = 10.0
                else:
                    factor = min(10.0, 0.9 * err ** (-1 / _ORDER))
                if rejected:
                    factor = min(1.0, factor)
                break
            h_abs *= max(0.2, 0.9 * err ** (-1 / _ORDER))
            rejected = True

        q = K.T @ _P
        seg_t.append(t)
        seg_h.append(h)
        seg_q.append(q)

        # event scan on the accepted step
        hit = None
        if events:
            t_start, y_start = t, y

            def local(s, _t=t_start, _y=y_start, _h=h, _q=q):
                th = (s - _t) / _h
                return _y + _h * (_q @ np.array([th, th * th, th ** 3, th ** 4]))

            for k, ev in enumerate(events):
                g_new = ev.indicator(t_new, y_new)
                if ev.crosses(g_old[k], g_new):
                    if g_new == 0.0:
                        te, ye = t_new, y_new.copy()
                    else:
                        te, ye = _bisect_in_segment(ev, local, t_start, t_new, g_old[k], atol)
                    found.append(EventRecord(te, ye, k))
                    if ev.terminal and (hit is None or direction * (te - hit[0]) < 0):
                        hit = (te, ye)
                g_old[k] = g_new

        if hit is not None:
            times.append(hit[0])
            states.append(hit[1])
            found = [e for e in found if direction * (e.t - hit[0]) <= 0]
            terminated = True
            break

        t, y, f = t_new, y_new, K[6].copy()
        times.append(t)
        states.append(y.copy())
        h_abs = min(h_abs * factor, cfg.max_step)

    return Trajectory(
        times=np.array(times),
        states=np.array(states),
        seg_t=np.array(seg_t),
        seg_h=np.array(seg_h),
        seg_q=np.array(seg_q),
        events=found,
        terminated=terminated,
        abs_tol=atol,
    )


def locate_event(traj: Trajectory, event: EventSpec) -> tuple[float, np.ndarray]:
    """First crossing of ``event`` along a finished trajectory.

    Brackets the crossing between stored nodes and bisects on the dense
    interpolant until ``|indicator| <= traj.abs_tol``.
    """
    g_old = event.indicator(traj.times[0], traj.states[0])
    for i in range(1, len(traj.times)):
        ti, yi = traj.times[i], traj.states[i]
        g_new = event.indicator(ti, yi)
        if event.crosses(g_old, g_new):
            if g_new == 0.0:
                return float(ti), yi.copy()
            return _bisect_in_segment(event, traj, float(traj.times[i - 1]), float(ti),
                                      g_old, traj.abs_tol)
        g_old = g_new
    raise NoSignChange("indicator does not change sign on the trajectory")


# -- fixed-step schemes, used for order checks -------------------------------

def _rk4_step(rhs, t, y, h):
    k1 = np.asarray(rhs(t, y), dtype=float)
    k2 = np.asarray(rhs(t + h / 2, y + h / 2 * k1), dtype=float)
    k3 = np.asarray(rhs(t + h / 2, y + h / 2 * k2), dtype=float)
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _dopri_step(rhs, t, y, h):
    K = np.empty((6, y.size))
    K[0] = rhs(t, y)
    for i in range(1, 6):
        K[i] = rhs(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
    return y + h * (_B @ K)


_FIXED = {"rk4": _rk4_step, "dopri5": _dopri_step}


def fixed_step(rhs: Rhs, y0, t0: float, t1: float, n: int, scheme: str = "rk4") -> np.ndarray:
    """Final state after ``n`` equal steps of ``scheme``."""
    step = _FIXED[scheme]
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / n
    for i in range(n):
        y = step(rhs, t0 + i * h, y, h)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"non-finite state at step {i}")
    return y


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    errors: tuple  # errors at H, H/2, H/4
    steps: tuple


def convergence_order(rhs: Rhs, y0, span: tuple[float, float], reference,
                      n: int = 20, scheme: str = "rk4") -> OrderEstimate:
    """Observed order from fixed-step runs with n, 2n and 4n steps.

    ``reference`` is either the exact final state or a callable of t.
    """
    t0, t1 = span
    exact = np.asarray(reference(t1) if callable(reference) else reference, dtype=float)
    counts = (n, 2 * n, 4 * n)
    errs = tuple(float(np.max(np.abs(fixed_step(rhs, y0, t0, t1, m, scheme) - exact)))
                 for m in counts)
    order = math.log2(errs[1] / errs[2])
    return OrderEstimate(order, errs, tuple((t1 - t0) / m for m in counts))
