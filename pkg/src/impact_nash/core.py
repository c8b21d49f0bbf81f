"""Shared domain types, hypothesis checks and the competition aggregate.

All types are frozen; every function here is pure.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError

#: Absolute guard on denominators that enter equilibrium formulas reciprocally.
SINGULAR_TOL = 1e-10


@dataclass(frozen=True)
class MarketParams:
    """Uncontrolled market: drift ``mu``, volatility ``sigma``, horizon ``T``."""

    mu: float
    sigma: float
    horizon: float = 1.0

    def __post_init__(self):
        for name in ("mu", "sigma", "horizon"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class AgentParams:
    """One investor: risk tolerance, competition weight and initial wealth."""

    delta: float
    theta: float = 0.0
    x0: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.delta) or self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta!r}")
        if not math.isfinite(self.x0):
            raise DomainError(f"x0 must be finite, got {self.x0!r}")


@dataclass(frozen=True)
class GameSpec:
    """An n-agent game: market, ordered agents and linear impact ``alpha``."""

    market: MarketParams
    agents: tuple[AgentParams, ...]
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if len(self.agents) < 1:
            raise DomainError("a game needs at least one agent")
        if not math.isfinite(self.alpha):
            raise DomainError(f"alpha must be finite, got {self.alpha!r}")

    @classmethod
    def from_arrays(cls, mu, sigma, deltas, thetas=None, alpha=0.0, x0=None, horizon=1.0):
        """Build a spec from per-agent parameter sequences."""
        deltas = list(deltas)
        thetas = [0.0] * len(deltas) if thetas is None else list(thetas)
        x0 = [1.0] * len(deltas) if x0 is None else list(x0)
        if not len(deltas) == len(thetas) == len(x0):
            raise DomainError("per-agent sequences must have equal length")
        agents = tuple(
            AgentParams(float(d), float(t), float(x)) for d, t, x in zip(deltas, thetas, x0)
        )
        return cls(MarketParams(float(mu), float(sigma), float(horizon)), agents, float(alpha))

    def with_alpha(self, alpha: float) -> GameSpec:
        return dataclasses.replace(self, alpha=float(alpha))

    @property
    def n(self) -> int:
        return len(self.agents)

    @cached_property
    def deltas(self) -> np.ndarray:
        return _frozen_array([a.delta for a in self.agents])

    @cached_property
    def thetas(self) -> np.ndarray:
        return _frozen_array([a.theta for a in self.agents])

    @cached_property
    def x0s(self) -> np.ndarray:
        return _frozen_array([a.x0 for a in self.agents])

    @property
    def hat_theta(self) -> float:
        return hat_theta(self.agents)

    @property
    def alpha_max(self) -> float:
        return alpha_max(self)


def _frozen_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    value: float
    description: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking the equilibrium existence hypotheses for one spec.

    ``singular_distance`` is the signed denominator whose vanishing rules out
    an equilibrium (``1 - s_hat(alpha)`` for CARA, the condition-c
    expression for CRRA).
    """

    conditions: tuple[Condition, ...]
    singular_distance: float
    alpha_max: float
    mode: str = field(default="cara")

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def failed(self) -> list[Condition]:
        return [c for c in self.conditions if not c.passed]

    @property
    def satisfied(self) -> list[tuple[str, bool]]:
        return [(c.name, c.passed) for c in self.conditions]

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def hat_theta(agents: Sequence[AgentParams]) -> float:
    """Competition aggregate ``sum_j theta_j / (n + theta_j)``."""
    n = len(agents)
    return math.fsum(a.theta / (n + a.theta) for a in agents)


def alpha_max(spec: GameSpec) -> float:
    """Largest impact keeping every agent's criterion concave: n sigma^2 / (2 delta_max)."""
    return spec.n * spec.market.sigma**2 / (2.0 * float(spec.deltas.max()))


def concavity_margins(spec: GameSpec, alpha: float | None = None) -> np.ndarray:
    """Per-agent ``n sigma^2 - 2 delta_j alpha``; all positive iff alpha < alpha_max."""
    alpha = spec.alpha if alpha is None else alpha
    return spec.n * spec.market.sigma**2 - 2.0 * spec.deltas * alpha


def impact_sum(spec: GameSpec, alpha: float | None = None) -> float:
    """The alpha-proportional part of s_hat: sum_j n alpha delta_j / ((n+theta_j)(n sigma^2 - delta_j alpha)).

    Kept separate from ``hat_theta`` so callers needing ``s_hat - hat_theta``
    avoid cancellation at small alpha.
    """
    alpha = spec.alpha if alpha is None else alpha
    n, s2 = spec.n, spec.market.sigma**2
    d, t = spec.deltas, spec.thetas
    denom = (n + t) * (n * s2 - d * alpha)
    if np.any(denom == 0):
        return math.nan
    return math.fsum(n * alpha * d / denom)


def crra_denominators(spec: GameSpec, alpha: float | None = None) -> np.ndarray:
    """Condition-a expressions ``(n+theta_i)(n sigma^2 - delta_i alpha) - n theta_i delta_i sigma^2``."""
    alpha = spec.alpha if alpha is None else alpha
    n, s2 = spec.n, spec.market.sigma**2
    d, t = spec.deltas, spec.thetas
    return (n + t) * (n * s2 - d * alpha) - n * t * d * s2


def crra_numerators(spec: GameSpec, alpha: float | None = None) -> np.ndarray:
    """Coupling numerators ``(n-theta_j) alpha delta_j - n theta_j (delta_j - 1) sigma^2``."""
    alpha = spec.alpha if alpha is None else alpha
    n, s2 = spec.n, spec.market.sigma**2
    d, t = spec.deltas, spec.thetas
    return (n - t) * alpha * d - n * t * (d - 1.0) * s2


def crra_condition_c(spec: GameSpec, alpha: float | None = None) -> float:
    """Condition-c expression ``1 - sum_j numerator_j / denominator_j``; nan at a pole."""
    den = crra_denominators(spec, alpha)
    if np.any(den == 0):
        return math.nan
    return 1.0 - math.fsum(crra_numerators(spec, alpha) / den)


def validate_cara(spec: GameSpec) -> ValidationReport:
    """Check the CARA equilibrium hypotheses.

    (i) ``n sigma^2 - 2 delta_j alpha > 0`` for every agent, and
    (ii) ``1 - hat_theta`` differs from the impact sum, i.e. ``s_hat != 1``,
    with the signed distance ``1 - s_hat`` recorded.
    """
    margins = concavity_margins(spec)
    cond_i = Condition(
        "concavity",
        bool(np.all(margins > 0)),
        float(margins.min()),
        "n*sigma^2 - 2*delta_j*alpha > 0 for all j",
    )
    distance = 1.0 - spec.hat_theta - impact_sum(spec)
    cond_ii = Condition(
        "nonsingular",
        bool(math.isfinite(distance) and abs(distance) >= SINGULAR_TOL),
        distance,
        "1 - s_hat(alpha) != 0",
    )
    return ValidationReport((cond_i, cond_ii), distance, alpha_max(spec), mode="cara")


def validate_crra(spec: GameSpec) -> ValidationReport:
    """Check the CRRA equilibrium hypotheses (conditions a, b, c) plus positive wealth."""
    wealth_ok = bool(np.all(spec.x0s > 0))
    den = crra_denominators(spec)
    margins = concavity_margins(spec)
    c_value = crra_condition_c(spec)
    conditions = (
        Condition("positive_wealth", wealth_ok, float(spec.x0s.min()), "x0_j > 0 for all j"),
        Condition(
            "a_denominators",
            bool(np.all(np.abs(den) >= SINGULAR_TOL)),
            float(den[np.argmin(np.abs(den))]),
            "(n+theta_i)(n*sigma^2 - delta_i*alpha) - n*theta_i*delta_i*sigma^2 != 0",
        ),
        Condition(
            "b_concavity",
            bool(np.all(margins > 0)),
            float(margins.min()),
            "n*sigma^2 - 2*delta_i*alpha > 0 for all i",
        ),
        Condition(
            "c_nonsingular",
            bool(math.isfinite(c_value) and abs(c_value) >= SINGULAR_TOL),
            c_value,
            "1 - sum_j coupling_j / denominator_j != 0",
        ),
    )
    return ValidationReport(conditions, c_value, alpha_max(spec), mode="crra")
