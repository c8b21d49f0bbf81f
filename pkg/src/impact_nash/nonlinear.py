"""Nonlinear price impact under CARA utility.

The drift becomes ``mu + g(mean(pi))`` for a strictly increasing continuous
``g`` with ``g(0) = 0``. Against constant opponents, agent i's constant best
response maximizes the certainty-equivalent criterion

    h(a) = (a - c) (mu + g((a + s) / n)) - sigma^2 (a - c)^2 / (2 delta_i),

with ``s`` the opponents' total and ``c = theta_i s / n``. Superlinear ``g``
makes ``h`` unbounded above; sublinear ``g`` makes it coercive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GameSpec
from .errors import DomainError, NoConvergence, Unbounded
from .numerics import bisect, golden_section_max


class ImpactKind(str, enum.Enum):
    LINEAR = "linear"
    SIGNED_POWER = "power"


class Growth(str, enum.Enum):
    SUBLINEAR = "sublinear"
    LINEAR = "linear"
    SUPERLINEAR = "superlinear"


@dataclass(frozen=True)
class ImpactFunction:
    """Price-impact map ``g``.

    ``LINEAR``: ``g(x) = alpha x`` (any real alpha). ``SIGNED_POWER``:
    ``g(x) = alpha sign(x) |x|^gamma`` with ``alpha, gamma > 0``.
    """

    kind: ImpactKind
    alpha: float
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ImpactKind(self.kind))
        if not math.isfinite(self.alpha):
            raise DomainError("impact alpha must be finite")
        if self.kind is ImpactKind.SIGNED_POWER:
            if not self.alpha > 0:
                raise DomainError(f"power impact needs alpha > 0, got {self.alpha!r}")
            if not (math.isfinite(self.gamma) and self.gamma > 0):
                raise DomainError(f"power impact needs gamma > 0, got {self.gamma!r}")
        elif self.gamma != 1.0:
            raise DomainError("linear impact has no exponent")

    @classmethod
    def linear(cls, alpha: float) -> ImpactFunction:
        return cls(ImpactKind.LINEAR, float(alpha))

    @classmethod
    def power(cls, alpha: float, gamma: float) -> ImpactFunction:
        return cls(ImpactKind.SIGNED_POWER, float(alpha), float(gamma))

    def __call__(self, x):
        if self.kind is ImpactKind.LINEAR:
            return self.alpha * x
        return self.alpha * np.sign(x) * np.abs(x) ** self.gamma

    def derivative(self, x):
        """``g'(x)``; infinite at 0 for a sublinear power."""
        if self.kind is ImpactKind.LINEAR:
            return self.alpha + 0.0 * x
        with np.errstate(divide="ignore"):
            return self.alpha * self.gamma * np.abs(x) ** (self.gamma - 1.0)

    @property
    def growth(self) -> Growth:
        if self.kind is ImpactKind.LINEAR or self.gamma == 1.0:
            return Growth.LINEAR
        return Growth.SUBLINEAR if self.gamma < 1.0 else Growth.SUPERLINEAR


def impact_eval(g: ImpactFunction, x):
    return g(x)


def classify_growth(g: ImpactFunction) -> Growth:
    return g.growth


@dataclass(frozen=True)
class FixedPointReport:
    strategies: np.ndarray
    residual: float
    iterations: int
    converged: bool


def _criterion(spec: GameSpec, g: ImpactFunction, i: int, others_sum: float):
    n, mu = spec.n, spec.market.mu
    agent = spec.agents[i]
    c = agent.theta / n * others_sum
    k = spec.market.sigma**2 / (2.0 * agent.delta)

    def h(a):
        phi = a - c
        return phi * (mu + g((a + others_sum) / n)) - k * phi * phi

    def dh(a):
        phi = a - c
        x = (a + others_sum) / n
        return mu + g(x) + phi * g.derivative(x) / n - 2.0 * k * phi

    return h, dh


def best_response_criterion(spec: GameSpec, g: ImpactFunction, i: int, others: Sequence[float], a):
    """Evaluate agent i's certainty-equivalent criterion at ``a`` (scalar or array)."""
    h, _ = _criterion(spec, g, i, math.fsum(others))
    return h(np.asarray(a, dtype=float))


def divergence_profile(spec: GameSpec, g: ImpactFunction, i: int, others: Sequence[float],
                       magnitudes: Sequence[float] = (1e4, 1e5, 1e6)) -> dict[str, np.ndarray]:
    """Criterion values at ``a = +m`` and ``a = -m`` for growing ``m``.

    Diagnostic for superlinear impact, where both branches increase without bound.
    """
    m = np.asarray(magnitudes, dtype=float)
    h, _ = _criterion(spec, g, i, math.fsum(others))
    return {"magnitudes": m, "positive": h(m), "negative": h(-m)}


_GRID_POINTS = 2001
_MAX_ABS = 1e6


def best_response_nonlinear(spec: GameSpec, g: ImpactFunction, i: int, others: Sequence[float],
                            tol: float = 1e-12) -> float:
    """Global maximizer of agent i's criterion against constant ``others``.

    Scans a 2001-point grid over a bracket that doubles until the criterion
    falls off at both ends, refines the two best local grid maxima by
    golden-section search (the criterion has at most two global maxima),
    polishes each on the analytic derivative and returns the better one,
    preferring the smaller ``|a|`` on a tie.

    Raises
    ------
    Unbounded
        For superlinear ``g``, or when the bracket passes ``|a| = 1e6``
        while the criterion is still increasing.
    DomainError
        For linear ``g`` with ``n sigma^2 - 2 delta_i alpha <= 0``.
    """
    growth = g.growth
    if growth is Growth.SUPERLINEAR:
        raise Unbounded("superlinear impact: the best-response criterion has no maximizer")
    n, mu, s2 = spec.n, spec.market.mu, spec.market.sigma**2
    agent = spec.agents[i]
    if len(others) != n - 1:
        raise ValueError(f"expected {n - 1} opponent strategies, got {len(others)}")
    if growth is Growth.LINEAR and n * s2 - 2.0 * agent.delta * g.alpha <= 0:
        raise DomainError(f"n*sigma^2 - 2*delta_i*alpha <= 0 for agent {i}: criterion is not concave")

    s = math.fsum(others)
    h, dh = _criterion(spec, g, i, s)
    center = agent.theta / n * s + agent.delta * mu / s2
    half = 10.0 * (float(spec.deltas.max()) * mu / s2 + 1.0)
    while True:
        lo, hi = center - half, center + half
        if max(abs(lo), abs(hi)) > _MAX_ABS:
            raise Unbounded(f"criterion still increasing beyond |a| = {_MAX_ABS:g}")
        grid = np.linspace(lo, hi, _GRID_POINTS)
        values = h(grid)
        k = int(np.argmax(values))
        if 0 < k < _GRID_POINTS - 1 and values[0] < values[1] and values[-1] < values[-2]:
            break
        half *= 2.0

    interior = np.arange(1, _GRID_POINTS - 1)
    is_peak = (values[interior] >= values[interior - 1]) & (values[interior] >= values[interior + 1])
    peaks = interior[is_peak]
    peaks = peaks[np.argsort(values[peaks])[::-1]][:2]

    candidates = []
    for k in peaks:
        a_lo, a_hi = float(grid[k - 1]), float(grid[k + 1])
        x, fx = golden_section_max(lambda a: float(h(a)), a_lo, a_hi, tol=tol)
        x, fx = _polish(h, dh, a_lo, a_hi, x, fx, tol)
        candidates.append((x, fx))

    best_x, best_f = candidates[0]
    for x, fx in candidates[1:]:
        tie = abs(fx - best_f) <= 1e-14 * max(1.0, abs(best_f))
        if (fx > best_f and not tie) or (tie and abs(x) < abs(best_x)):
            best_x, best_f = x, fx
    return best_x


def _polish(h, dh, lo, hi, x, fx, tol):
    # Golden section resolves a smooth maximum only to ~sqrt(eps); a sign
    # change of h' on the grid cell pins it to rounding level.
    d_lo, d_hi = float(dh(lo)), float(dh(hi))
    if not (math.isfinite(d_lo) and math.isfinite(d_hi)) or not (d_lo > 0 > d_hi):
        return x, fx
    root = bisect(lambda a: float(dh(a)), lo, hi, tol=min(tol, 1e-15 * max(1.0, abs(x)))).root
    f_root = float(h(root))
    if f_root >= fx - 1e-15 * max(1.0, abs(fx)):
        return root, f_root
    return x, fx


def best_response_map(spec: GameSpec, g: ImpactFunction, profile: np.ndarray) -> np.ndarray:
    """Simultaneous best responses of every agent against ``profile``."""
    profile = np.asarray(profile, dtype=float)
    return np.array([
        best_response_nonlinear(spec, g, i, np.delete(profile, i))
        for i in range(spec.n)
    ])


def nash_fixed_point(spec: GameSpec, g: ImpactFunction, tol: float = 1e-10,
                     damping: float = 0.5, max_iter: int = 10_000,
                     start: Sequence[float] | None = None) -> FixedPointReport:
    """Constant Nash equilibrium by damped best-response iteration.

    Iterates ``pi <- (1 - damping) pi + damping BR(pi)`` from the zero
    profile (or ``start``) until the sup-norm update drops below ``tol``.
    Raises ``NoConvergence`` (carrying the last report) at the cap.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if g.growth is Growth.SUPERLINEAR:
        raise Unbounded("superlinear impact: no best response, hence no equilibrium")
    pi = np.zeros(spec.n) if start is None else np.array(start, dtype=float)
    residual = math.inf
    for it in range(1, max_iter + 1):
        update = damping * (best_response_map(spec, g, pi) - pi)
        pi = pi + update
        residual = float(np.max(np.abs(update)))
        if not math.isfinite(residual):
            break
        if residual < tol:
            return FixedPointReport(pi, residual, it, True)
    report = FixedPointReport(pi, residual, max_iter, False)
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {residual:g})", report)
