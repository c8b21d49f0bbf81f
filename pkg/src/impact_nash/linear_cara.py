"""Closed-form equilibrium for exponential utility with linear price impact.

Agent i maximizes ``E[-exp(-(X_T^i - theta_i/n sum_{j!=i} X_T^j) / delta_i)]``
where strategies are currency amounts and the stock drift is
``mu + alpha * mean(pi)``. The best response reduces to a single-agent
problem in a market with corrected impact; stacking the best responses gives
a linear fixed-point system with the explicit solution implemented here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    SINGULAR_TOL,
    GameSpec,
    ValidationReport,
    alpha_max,
    impact_sum,
    validate_cara,
)
from .errors import BracketError, ConsistencyError, DomainError, SingularDenominator
from .numerics import bisect


class Mode(str, enum.Enum):
    CARA_AMOUNT = "cara_amount"
    CRRA_FRACTION = "crra_fraction"


class SignClass(str, enum.Enum):
    ABOVE_MU = "above_mu"
    EQUAL_MU = "equal_mu"
    BELOW_MU = "below_mu"


@dataclass(frozen=True)
class EquilibriumResult:
    """A constant Nash equilibrium and its diagnostics.

    ``strategies`` are amounts in CARA mode and wealth fractions in CRRA mode.
    ``singular_distance`` is the denominator guarding existence (how far the
    spec sits from the critical impact).
    """

    strategies: np.ndarray
    mode: Mode
    mean_position: float
    equilibrium_drift: float
    s_hat_value: float | None = None
    singular_distance: float = math.nan
    report: ValidationReport | None = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return len(self.strategies)


@dataclass(frozen=True)
class CriticalAlphaResult:
    alpha0: float
    bracket: tuple[float, float]
    residual: float
    iterations: int


def s_hat(spec: GameSpec, alpha: float | None = None) -> float:
    """``hat_theta + sum_j n alpha delta_j / ((n + theta_j)(n sigma^2 - delta_j alpha))``.

    Strictly increasing on ``(-inf, alpha_max)``; raises ``DomainError`` at or
    above ``alpha_max``.
    """
    alpha = spec.alpha if alpha is None else float(alpha)
    if alpha >= alpha_max(spec):
        raise DomainError(f"alpha={alpha!r} is not below alpha_max={alpha_max(spec)!r}")
    return spec.hat_theta + impact_sum(spec, alpha)


def critical_alpha(spec: GameSpec, tol: float = 1e-12, max_iter: int = 200) -> CriticalAlphaResult:
    """Locate the unique ``alpha0`` with ``s_hat(alpha0) = 1`` by bisection.

    ``alpha0`` lies in ``(0, alpha_max)`` for two or more agents; a single
    agent has ``alpha0 = alpha_max = sigma^2 / (2 delta)``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a_max = alpha_max(spec)
    lo, hi = 1e-12, a_max * (1.0 - 1e-9)
    if not s_hat(spec, 0.0) < 1.0:
        raise BracketError("s_hat(0) = hat_theta is not below 1")

    def excess(a):
        # s_hat has its pole at 2 alpha_max, so it stays finite up to alpha_max.
        return spec.hat_theta + impact_sum(spec, a) - 1.0

    if not excess(hi) > 0.0:
        # With a single agent s_hat(alpha_max) = 1 identically: alpha0 = alpha_max.
        at_max = excess(a_max)
        if abs(at_max) <= 1e-12:
            return CriticalAlphaResult(a_max, (a_max, a_max), abs(at_max), 0)
        if not at_max > 0.0:
            raise BracketError(f"s_hat does not exceed 1 below alpha_max={a_max!r}")
        hi = a_max
    res = bisect(excess, lo, hi, tol=tol, max_iter=max_iter)
    return CriticalAlphaResult(
        alpha0=res.root,
        bracket=res.bracket,
        residual=abs(excess(res.root)),
        iterations=res.iterations,
    )


def aux_best_response(spec: GameSpec, i: int, mu_tilde: float) -> float:
    """Optimal constant strategy ``n delta_i mu_tilde / (n sigma^2 - 2 delta_i alpha)`` of the reduced problem."""
    n, s2 = spec.n, spec.market.sigma**2
    delta = spec.agents[i].delta
    denom = n * s2 - 2.0 * delta * spec.alpha
    if denom <= 0:
        raise DomainError(f"n*sigma^2 - 2*delta_i*alpha = {denom!r} <= 0 for agent {i}")
    return n * delta * mu_tilde / denom


def cara_best_response(spec: GameSpec, i: int, others: Sequence[float]) -> float:
    """Agent i's optimal amount against fixed constant amounts of the others.

    ``others`` holds the n-1 opponent amounts in agent order with ``i`` removed.
    """
    n = spec.n
    theta = spec.agents[i].theta
    s = math.fsum(others)
    mu_tilde = spec.market.mu + spec.alpha * (n + theta) / n**2 * s
    return aux_best_response(spec, i, mu_tilde) + theta / n * s


def _cara_coefficients(spec: GameSpec) -> tuple[np.ndarray, np.ndarray]:
    # pi_i = a_i * mu + b_i * sum_j pi_j
    n, s2, alpha = spec.n, spec.market.sigma**2, spec.alpha
    d, t = spec.deltas, spec.thetas
    base = n * s2 - d * alpha
    a = n / (n + t) * n * d / base
    b = t / (n + t) + n * d * alpha / ((n + t) * base)
    return a, b


def cara_nash(spec: GameSpec) -> EquilibriumResult:
    """Unique constant Nash equilibrium (currency amounts) under CARA utility.

    Raises
    ------
    DomainError
        If some ``n sigma^2 - 2 delta_j alpha <= 0``.
    SingularDenominator
        If ``|1 - s_hat(alpha)| < 1e-10``; no constant equilibrium exists.
    """
    report = validate_cara(spec)
    if not report.condition("concavity").passed:
        raise DomainError(
            f"concavity fails: min n*sigma^2 - 2*delta_j*alpha = {report.condition('concavity').value!r}"
        )
    distance = report.singular_distance
    if not report.condition("nonsingular").passed:
        raise SingularDenominator(
            f"1 - s_hat(alpha) = {distance!r} within {SINGULAR_TOL}: no constant Nash equilibrium"
        )
    mu = spec.market.mu
    a, b = _cara_coefficients(spec)
    total = mu * math.fsum(a) / distance
    pi = a * mu + b * total
    mean = float(pi.mean())
    return EquilibriumResult(
        strategies=pi,
        mode=Mode.CARA_AMOUNT,
        mean_position=mean,
        equilibrium_drift=mu + spec.alpha * mean,
        s_hat_value=1.0 - distance,
        singular_distance=distance,
        report=report,
    )


def equilibrium_summary(spec: GameSpec, eq: EquilibriumResult, rtol: float = 1e-9):
    """Mean position, equilibrium drift and how the drift compares to ``mu``.

    For ``alpha != 0`` the mean is cross-checked against
    ``(s_hat - hat_theta)(mu / alpha) / (1 - s_hat)``.
    """
    mu, alpha = spec.market.mu, spec.alpha
    mean = float(np.mean(eq.strategies))
    if abs(alpha) >= 1e-12:
        s_minus_theta = impact_sum(spec, alpha)
        closed = s_minus_theta * (mu / alpha) / (1.0 - spec.hat_theta - s_minus_theta)
        if abs(closed - mean) > rtol * max(abs(mean), abs(closed)):
            raise ConsistencyError(f"mean position {mean!r} disagrees with closed form {closed!r}")
    drift = mu + alpha * mean
    if drift > mu:
        sign_class = SignClass.ABOVE_MU
    elif drift < mu:
        sign_class = SignClass.BELOW_MU
    else:
        sign_class = SignClass.EQUAL_MU
    return mean, drift, sign_class


def distance_to_critical(spec: GameSpec) -> float:
    """Signed distance ``alpha - alpha0`` (nan if alpha0 cannot be bracketed)."""
    try:
        return spec.alpha - critical_alpha(spec).alpha0
    except BracketError:
        return math.nan


__all__ = [
    "Mode",
    "SignClass",
    "EquilibriumResult",
    "CriticalAlphaResult",
    "s_hat",
    "critical_alpha",
    "aux_best_response",
    "cara_best_response",
    "cara_nash",
    "equilibrium_summary",
    "distance_to_critical",
]
