"""Closed-form equilibrium for power/log utility with linear price impact.

Strategies are wealth fractions. Agent i's criterion is the CRRA utility of
its own terminal wealth times the ``theta_i/n``-weighted geometric mean of
the others' wealth raised to ``-1``. With the others' fractions held
constant the best response is affine in their sum, and the resulting linear
system has an explicit solution.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .core import (
    GameSpec,
    alpha_max,
    crra_condition_c,
    crra_denominators,
    crra_numerators,
    validate_crra,
)
from .errors import DomainError, SingularDenominator
from .linear_cara import CriticalAlphaResult, EquilibriumResult, Mode
from .numerics import bisect


def crra_best_response(spec: GameSpec, i: int, others: Sequence[float]) -> float:
    """Agent i's optimal constant fraction when the others hold ``others`` (n-1 values)."""
    n, mu, s2, alpha = spec.n, spec.market.mu, spec.market.sigma**2, spec.alpha
    delta, theta = spec.agents[i].delta, spec.agents[i].theta
    if len(others) != n - 1:
        raise ValueError(f"expected {n - 1} opponent fractions, got {len(others)}")
    denom = n * s2 - 2.0 * alpha * delta
    if denom <= 0:
        raise DomainError(f"n*sigma^2 - 2*alpha*delta_i = {denom!r} <= 0 for agent {i}")
    slope = alpha * delta * (1.0 - theta / n) - s2 * theta * (delta - 1.0)
    return (n * delta * mu + slope * math.fsum(others)) / denom


def crra_nash(spec: GameSpec) -> EquilibriumResult:
    """Unique constant Nash equilibrium (wealth fractions) under CRRA utility.

    Raises ``DomainError`` when condition a, condition b or positive wealth
    fails and ``SingularDenominator`` when the condition-c expression is
    within 1e-10 of zero.
    """
    report = validate_crra(spec)
    for name in ("positive_wealth", "a_denominators", "b_concavity"):
        cond = report.condition(name)
        if not cond.passed:
            raise DomainError(f"condition {name} fails ({cond.description}); value {cond.value!r}")
    distance = report.singular_distance
    if not report.condition("c_nonsingular").passed:
        raise SingularDenominator(
            f"condition-c expression {distance!r} vanishes: no constant Nash equilibrium"
        )
    n, mu = spec.n, spec.market.mu
    den = crra_denominators(spec)
    own = n**2 * spec.deltas * mu / den
    coupling = crra_numerators(spec) / den
    pi = own + coupling * (math.fsum(own) / distance)
    mean = float(pi.mean())
    return EquilibriumResult(
        strategies=pi,
        mode=Mode.CRRA_FRACTION,
        mean_position=mean,
        equilibrium_drift=mu + spec.alpha * mean,
        s_hat_value=None,
        singular_distance=distance,
        report=report,
    )


def crra_critical_alphas(spec: GameSpec, points: int = 2001, tol: float = 1e-12,
                         lo: float | None = None, hi: float | None = None,
                         root_tol: float = 1e-6) -> list[CriticalAlphaResult]:
    """All roots of the condition-c expression in ``alpha`` found on a scan grid.

    Scans ``(-alpha_max, alpha_max (1 - 1e-9))`` by default and bisects every
    sign change. Sign changes caused by a pole of some condition-a denominator
    (where the expression blows up instead of crossing zero) are discarded.
    Uniqueness is not assumed.
    """
    a_max = alpha_max(spec)
    lo = -a_max if lo is None else lo
    hi = a_max * (1.0 - 1e-9) if hi is None else hi
    grid = np.linspace(lo, hi, points)

    def f(a):
        return crra_condition_c(spec, float(a))

    values = np.array([f(a) for a in grid])
    roots = []
    for k in range(points - 1):
        v0, v1 = values[k], values[k + 1]
        if not (math.isfinite(v0) and math.isfinite(v1)):
            continue
        if v0 == 0.0:
            roots.append(CriticalAlphaResult(float(grid[k]), (float(grid[k]),) * 2, 0.0, 0))
            continue
        if (v0 < 0) == (v1 < 0) or v1 == 0.0:
            continue
        # a condition-a pole inside the cell shows up as a sign flip of some denominator
        d0, d1 = crra_denominators(spec, grid[k]), crra_denominators(spec, grid[k + 1])
        if np.any(np.sign(d0) != np.sign(d1)):
            continue
        res = bisect(f, float(grid[k]), float(grid[k + 1]), tol=tol)
        residual = abs(f(res.root))
        if residual <= root_tol:
            roots.append(CriticalAlphaResult(res.root, res.bracket, residual, res.iterations))
    if values[-1] == 0.0:
        roots.append(CriticalAlphaResult(float(grid[-1]), (float(grid[-1]),) * 2, 0.0, 0))
    return roots
