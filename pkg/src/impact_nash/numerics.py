"""Scalar root bracketing and 1-D maximization used by the solvers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import BracketError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1 / phi
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1 / phi^2


@dataclass(frozen=True)
class BisectionResult:
    root: float
    bracket: tuple[float, float]
    iterations: int
    converged: bool


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
           max_iter: int = 200) -> BisectionResult:
    """Bisection on ``[lo, hi]`` until the bracket is no wider than ``tol``.

    ``f(lo)`` and ``f(hi)`` must have opposite signs (a zero at an end is
    accepted). Stops early if the midpoint stops moving in floating point.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return BisectionResult(lo, (lo, lo), 0, True)
    if f_hi == 0:
        return BisectionResult(hi, (hi, hi), 0, True)
    if not (math.copysign(1.0, f_lo) != math.copysign(1.0, f_hi)):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={f_lo!r}, {f_hi!r}")

    iterations = 0
    while hi - lo > tol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        iterations += 1
        if f_mid == 0:
            return BisectionResult(mid, (mid, mid), iterations, True)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    converged = hi - lo <= tol or 0.5 * (lo + hi) in (lo, hi)
    return BisectionResult(0.5 * (lo + hi), (lo, hi), iterations, converged)


def golden_section_max(f: Callable[[float], float], a: float, b: float,
                       tol: float = 1e-12, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for a maximum of a unimodal ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point evaluated.
    """
    a, b = min(a, b), max(a, b)
    c = a + INV_PHI2 * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = a + INV_PHI2 * (b - a)
            fc = f(c)
            if fc > best_f:
                best_x, best_f = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            if fd > best_f:
                best_x, best_f = d, fd
    return best_x, best_f
