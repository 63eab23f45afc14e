"""Adaptive Simpson quadrature with Richardson error control.

Used as the continuous-measure fallback for total mass, moments, and the
quadrature posterior oracle. The interval is first cut into 16 panels so
narrow features away from the midpoint are not missed, then each panel
is refined until the Richardson estimate of the local error is below its
share of the tolerance.
"""

from __future__ import annotations

from typing import Callable


class QuadratureError(Exception):
    pass


_INITIAL_PANELS = 16


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-9, max_depth: int = 48) -> float:
    if not (a < b):
        if a == b:
            return 0.0
        raise QuadratureError(f"bad interval [{a}, {b}]")
    total = 0.0
    h = (b - a) / _INITIAL_PANELS
    panel_tol = tol / _INITIAL_PANELS
    for i in range(_INITIAL_PANELS):
        x0 = a + i * h
        x2 = x0 + h
        x1 = 0.5 * (x0 + x2)
        f0, f1, f2 = float(f(x0)), float(f(x1)), float(f(x2))
        whole = (h / 6.0) * (f0 + 4.0 * f1 + f2)
        total += _refine(f, x0, x2, f0, f1, f2, whole, panel_tol, max_depth)
    return total


def _refine(f, x0, x2, f0, f1, f2, whole, tol, depth) -> float:
    x1 = 0.5 * (x0 + x2)
    lm = 0.5 * (x0 + x1)
    rm = 0.5 * (x1 + x2)
    flm, frm = float(f(lm)), float(f(rm))
    h = x2 - x0
    left = (h / 12.0) * (f0 + 4.0 * flm + f1)
    right = (h / 12.0) * (f1 + 4.0 * frm + f2)
    split = left + right
    err = split - whole
    if depth <= 0:
        return split
    if abs(err) <= 15.0 * tol:
        return split + err / 15.0
    return (_refine(f, x0, x1, f0, flm, f1, left, tol / 2.0, depth - 1)
            + _refine(f, x1, x2, f1, frm, f2, right, tol / 2.0, depth - 1))
