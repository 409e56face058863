"""Bracketing root finders."""
from __future__ import annotations

import math
from typing import Callable

from .errors import InvalidBracket


def bisect(fn: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-15,
           ftol: float = 0.0, max_iter: int = 200, history: list | None = None,
           f_lo: float | None = None, f_hi: float | None = None) -> float:
    """Bisection on a sign-change bracket.

    Stops when ``|fn(x)| <= ftol`` or the bracket is narrower than ``xtol``
    (or stops shrinking in floating point).  Returns the midpoint of the
    final bracket, or the exact hit.  Evaluations are appended to ``history``
    as ``(x, fn(x))`` pairs when given.
    """
    f_lo = fn(lo) if f_lo is None else f_lo
    f_hi = fn(hi) if f_hi is None else f_hi
    if history is not None:
        history.extend([(lo, f_lo), (hi, f_hi)])
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise InvalidBracket(f"no sign change on [{lo}, {hi}]: f={f_lo:.3e}, {f_hi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if abs(hi - lo) <= xtol or mid in (lo, hi):
            return mid
        f_mid = fn(mid)
        if history is not None:
            history.append((mid, f_mid))
        if abs(f_mid) <= ftol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
