"""Independent checks on equilibria: exact utilities, deviation certificates, Monte Carlo.

For constant strategy profiles the terminal law is available in closed
form (a single Gaussian ``W_T`` drives every wealth process), so expected
utilities reduce to Gaussian / lognormal moments and simulation needs no
time stepping.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GameSpec
from .errors import DomainError
from .numerics import golden_section_max
from .nonlinear import ImpactFunction


class UtilityMode(str, enum.Enum):
    CARA = "cara"
    CRRA = "crra"


@dataclass(frozen=True)
class SimulationSpec:
    paths: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.paths < 1:
            raise ValueError("paths must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned value")


@dataclass(frozen=True)
class AgentCertificate:
    agent: int
    equilibrium_value: float
    best_deviation: float
    gain: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    agents: tuple[AgentCertificate, ...]
    grid: str
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.agents)

    @property
    def max_gain(self) -> float:
        return max(a.gain for a in self.agents)


def _impact(spec: GameSpec, g: ImpactFunction | None) -> ImpactFunction:
    return ImpactFunction.linear(spec.alpha) if g is None else g


def cara_certainty_equivalent(spec: GameSpec, g: ImpactFunction | None, profile, i: int,
                              deviation=None):
    """``mu(pi^i) - sigma(pi^i)^2 / (2 delta_i)`` per unit time, optionally at deviations of agent i."""
    g = _impact(spec, g)
    profile = np.asarray(profile, dtype=float)
    n, mu, sigma = spec.n, spec.market.mu, spec.market.sigma
    agent = spec.agents[i]
    s = math.fsum(np.delete(profile, i))
    a = profile[i] if deviation is None else np.asarray(deviation, dtype=float)
    phi = a - agent.theta / n * s
    return phi * (mu + g((a + s) / n)) - (phi * sigma) ** 2 / (2.0 * agent.delta)


def _cara_y0(spec: GameSpec, i: int) -> float:
    n = spec.n
    x0 = spec.x0s
    return float(x0[i] - spec.agents[i].theta / n * (x0.sum() - x0[i]))


def cara_utility_constant(spec: GameSpec, g: ImpactFunction | None, profile: Sequence[float],
                          i: int) -> float:
    """Exact CARA expected utility of agent i for a constant profile of amounts.

    ``-exp(-y0/delta) * exp(-(mu(pi) - sigma(pi)^2/(2 delta)) T / delta)`` with
    ``y0 = x0_i - theta_i/n sum_{j!=i} x0_j``.
    """
    delta, T = spec.agents[i].delta, spec.market.horizon
    ce = float(cara_certainty_equivalent(spec, g, profile, i))
    return -math.exp(-_cara_y0(spec, i) / delta - ce * T / delta)


def _crra_moments(spec: GameSpec, g: ImpactFunction | None, profile, i: int, deviation=None):
    # Mean and variance of Z = log(X_T^i * prod_{j!=i} (X_T^j)^(-theta_i/n)).
    g = _impact(spec, g)
    profile = np.asarray(profile, dtype=float)
    x0 = spec.x0s
    if np.any(x0 <= 0):
        raise DomainError("CRRA utility needs positive initial wealth for every agent")
    n, mu, sigma, T = spec.n, spec.market.mu, spec.market.sigma, spec.market.horizon
    theta = spec.agents[i].theta
    others = np.delete(profile, i)
    s, s_sq = math.fsum(others), math.fsum(others**2)
    a = profile[i] if deviation is None else np.asarray(deviation, dtype=float)
    phi = a - theta / n * s
    drift = mu + g((a + s) / n)
    m = phi * drift - 0.5 * sigma**2 * a**2 + theta * sigma**2 / (2.0 * n) * s_sq
    log_x0 = math.log(x0[i]) - theta / n * math.fsum(np.log(np.delete(x0, i)))
    return log_x0 + m * T, (sigma * phi) ** 2 * T


def _crra_log_scale(delta: float, mean, var):
    # For delta != 1: E[U] = delta/(delta-1) * exp(L) with L = R mean + R^2 var / 2.
    r = (delta - 1.0) / delta
    return r * mean + 0.5 * r * r * var


def crra_utility_constant(spec: GameSpec, profile: Sequence[float], i: int,
                          g: ImpactFunction | None = None) -> float:
    """Exact CRRA expected utility of agent i for a constant profile of fractions.

    Lognormal moment formula: ``delta/(delta-1) exp(R E[Z] + R^2 Var[Z] / 2)``
    with ``R = (delta-1)/delta``, or ``E[Z]`` for log utility.
    """
    delta = spec.agents[i].delta
    mean, var = _crra_moments(spec, g, profile, i)
    if delta == 1.0:
        return float(mean)
    return delta / (delta - 1.0) * math.exp(_crra_log_scale(delta, mean, var))


def _relative_gain_fn(spec: GameSpec, g, profile, i: int, mode: UtilityMode):
    """Return ``gain(a)``: (U(deviation a) - U(profile)) / |U(profile)| computed stably."""
    delta, T = spec.agents[i].delta, spec.market.horizon
    if mode is UtilityMode.CARA:
        ce_star = float(cara_certainty_equivalent(spec, g, profile, i))

        def gain(a):
            ce = cara_certainty_equivalent(spec, g, profile, i, deviation=a)
            with np.errstate(over="ignore"):
                return -np.expm1(-(ce - ce_star) * T / delta)

        return gain

    mean_star, var_star = _crra_moments(spec, g, profile, i)
    if delta == 1.0:
        scale = max(abs(float(mean_star)), 1e-300)

        def gain(a):
            mean, _ = _crra_moments(spec, g, profile, i, deviation=a)
            return (mean - mean_star) / scale

        return gain

    l_star = _crra_log_scale(delta, mean_star, var_star)
    sign = 1.0 if delta > 1.0 else -1.0

    def gain(a):
        mean, var = _crra_moments(spec, g, profile, i, deviation=a)
        with np.errstate(over="ignore"):
            return sign * np.expm1(_crra_log_scale(delta, mean, var) - l_star)

    return gain


def nash_certificate(spec: GameSpec, g: ImpactFunction | None, profile: Sequence[float],
                     mode: UtilityMode | str = UtilityMode.CARA, points: int = 401,
                     width: float = 5.0, tolerance: float = 1e-9,
                     agents: Sequence[int] | None = None) -> CertificateReport:
    """Check that no agent gains from a unilateral constant deviation.

    Each agent's utility is evaluated on ``points`` equally spaced deviations
    over ``[p - width|p| - 1, p + width|p| + 1]`` around its profile entry
    ``p``, the best grid point is polished by golden-section search between
    its neighbours, and the agent passes iff the best relative utility gain
    is at most ``tolerance``.
    """
    mode = UtilityMode(mode)
    profile = np.asarray(profile, dtype=float)
    indices = range(spec.n) if agents is None else agents
    results = []
    for i in indices:
        gain = _relative_gain_fn(spec, g, profile, i, mode)
        p = float(profile[i])
        half = width * abs(p) + 1.0
        grid = np.linspace(p - half, p + half, points)
        gains = np.nan_to_num(gain(grid), nan=-np.inf)
        k = int(np.argmax(gains))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, points - 1)]
        x, gx = golden_section_max(lambda a: float(gain(a)), float(lo), float(hi), tol=1e-12)
        best_x, best_gain = (x, gx) if gx >= gains[k] else (float(grid[k]), float(gains[k]))
        results.append(AgentCertificate(i, p, best_x, float(best_gain), bool(best_gain <= tolerance)))
    grid_desc = f"{points} points on [p - {width:g}|p| - 1, p + {width:g}|p| + 1] + golden polish"
    return CertificateReport(tuple(results), grid_desc, tolerance)


def _standard_normals(seed: int, paths: int, block: int = 4096) -> np.ndarray:
    # Path k always draws from stream (seed, k // block) at offset k % block,
    # so results do not depend on the total path count or on evaluation order.
    out = np.empty(paths)
    for b, start in enumerate(range(0, paths, block)):
        size = min(block, paths - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))
        out[start:start + size] = rng.standard_normal(size)
    return out


def simulate_terminal_wealth(spec: GameSpec, g: ImpactFunction | None, profile: Sequence[float],
                             mode: UtilityMode | str, sim: SimulationSpec) -> np.ndarray:
    """Exact samples of every agent's terminal wealth, shape ``(paths, n)``."""
    mode = UtilityMode(mode)
    g = _impact(spec, g)
    profile = np.asarray(profile, dtype=float)
    mu, sigma, T = spec.market.mu, spec.market.sigma, spec.market.horizon
    w = math.sqrt(T) * _standard_normals(sim.seed, sim.paths)[:, None]
    drift = mu + float(g(profile.mean()))
    if mode is UtilityMode.CARA:
        return spec.x0s + profile * drift * T + profile * sigma * w
    log_x = np.log(spec.x0s) + (profile * drift - 0.5 * sigma**2 * profile**2) * T + profile * sigma * w
    return np.exp(log_x)


def simulate_utility(spec: GameSpec, g: ImpactFunction | None, profile: Sequence[float], i: int,
                     mode: UtilityMode | str, sim: SimulationSpec) -> tuple[float, float]:
    """Monte Carlo estimate of agent i's expected utility and its standard error."""
    mode = UtilityMode(mode)
    g = _impact(spec, g)
    profile = np.asarray(profile, dtype=float)
    n = spec.n
    agent = spec.agents[i]
    mu, sigma, T = spec.market.mu, spec.market.sigma, spec.market.horizon
    w = math.sqrt(T) * _standard_normals(sim.seed, sim.paths)
    drift = mu + float(g(profile.mean()))
    others = np.delete(np.arange(n), i)
    if mode is UtilityMode.CARA:
        x = spec.x0s[:, None] + (profile * drift * T)[:, None] + (profile * sigma)[:, None] * w
        y = x[i] - agent.theta / n * x[others].sum(axis=0)
        samples = -np.exp(-y / agent.delta)
    else:
        if np.any(spec.x0s <= 0):
            raise DomainError("CRRA simulation needs positive initial wealth")
        log_x = (np.log(spec.x0s) + (profile * drift - 0.5 * sigma**2 * profile**2) * T)[:, None] \
            + (profile * sigma)[:, None] * w
        z = log_x[i] - agent.theta / n * log_x[others].sum(axis=0)
        if agent.delta == 1.0:
            samples = z
        else:
            r = (agent.delta - 1.0) / agent.delta
            samples = agent.delta / (agent.delta - 1.0) * np.exp(r * z)
    estimate = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(sim.paths)) if sim.paths > 1 else math.nan
    return estimate, se
