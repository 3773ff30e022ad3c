"""One-dimensional minimization helpers for the per-unit solvers."""

from __future__ import annotations

import math
from typing import Callable

__all__ = ["golden_section"]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]`` to argument tolerance ``tol``.

    Returns ``(x, f(x))``. Both endpoints are evaluated and compared against
    the interior estimate; exact ties prefer the upper endpoint, then the
    lower one. Monotone or flat objectives therefore return a corner exactly,
    which the callers rely on for their tie-break rules.
    """
    if hi < lo:
        raise ValueError(f"empty search interval [{lo}, {hi}]")
    f_lo = f(lo)
    f_hi = f(hi)
    if hi == lo:
        return lo, f_lo

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    f_c = f(c)
    f_d = f(d)
    # bracket shrinks by 1/phi per step; stop once narrower than tol
    while (b - a) > tol:
        if f_c <= f_d:
            b, d, f_d = d, c, f_c
            c = b - _INV_PHI * (b - a)
            f_c = f(c)
        else:
            a, c, f_c = c, d, f_d
            d = a + _INV_PHI * (b - a)
            f_d = f(d)

    if f_c <= f_d:
        x_in, f_in = c, f_c
    else:
        x_in, f_in = d, f_d

    # endpoint polish: ties resolve toward hi, then lo, then the interior
    best_x, best_f = x_in, f_in
    if f_lo <= best_f:
        best_x, best_f = lo, f_lo
    if f_hi <= best_f:
        best_x, best_f = hi, f_hi
    return best_x, best_f
