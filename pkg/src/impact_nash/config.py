"""JSON run configuration for the command-line tool.

Example::

    {
      "market": {"mu": 0.03, "sigma": 0.2, "horizon": 1.0},
      "agents": [{"delta": 1.0, "theta": 0.5, "x0": 1.0},
                 {"delta": 2.0, "theta": 0.7}],
      "impact": {"type": "power", "alpha": 0.01, "gamma": 0.5},
      "sweep": {"variable": "gamma", "from": 0.05, "to": 1.0, "points": 20},
      "simulation": {"paths": 100000, "seed": 42}
    }

``sweep``, ``simulation`` and ``profile`` (a fixed strategy vector for
``simulate`` / ``verify``) are optional.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .core import AgentParams, GameSpec, MarketParams
from .errors import ConfigError, DomainError
from .nonlinear import ImpactFunction, ImpactKind
from .verification import SimulationSpec


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    start: float
    stop: float
    points: int

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class RunConfig:
    spec: GameSpec
    impact: ImpactFunction
    sweep: SweepConfig | None = None
    simulation: SimulationSpec | None = None
    profile: tuple[float, ...] | None = None


def _number(block: dict, key: str, where: str, default: Any = ...) -> float:
    if key not in block:
        if default is ...:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _block(data: dict, key: str, required: bool = True) -> dict | None:
    if key not in data:
        if required:
            raise ConfigError(f"missing required block {key!r}")
        return None
    block = data[key]
    if not isinstance(block, dict):
        raise ConfigError(f"block {key!r} must be an object")
    return block


def parse_config(data: dict) -> RunConfig:
    """Validate a decoded JSON document and build the run configuration."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        market_block = _block(data, "market")
        market = MarketParams(
            _number(market_block, "mu", "market"),
            _number(market_block, "sigma", "market"),
            _number(market_block, "horizon", "market", 1.0),
        )
        raw_agents = data.get("agents")
        if not isinstance(raw_agents, list) or not raw_agents:
            raise ConfigError("'agents' must be a non-empty array")
        agents = []
        for k, a in enumerate(raw_agents):
            if not isinstance(a, dict):
                raise ConfigError(f"agents[{k}] must be an object")
            where = f"agents[{k}]"
            agents.append(AgentParams(
                _number(a, "delta", where),
                _number(a, "theta", where, 0.0),
                _number(a, "x0", where, 1.0),
            ))

        impact_block = _block(data, "impact")
        kind = impact_block.get("type", "linear")
        alpha = _number(impact_block, "alpha", "impact")
        if kind == "linear":
            impact = ImpactFunction.linear(alpha)
        elif kind == "power":
            impact = ImpactFunction(ImpactKind.SIGNED_POWER, alpha, _number(impact_block, "gamma", "impact", 1.0))
        else:
            raise ConfigError(f"impact.type must be 'linear' or 'power', got {kind!r}")
        spec = GameSpec(market, tuple(agents), alpha)

        sweep = None
        sweep_block = _block(data, "sweep", required=False)
        if sweep_block is not None:
            variable = sweep_block.get("variable")
            if variable not in ("alpha", "gamma"):
                raise ConfigError(f"sweep.variable must be 'alpha' or 'gamma', got {variable!r}")
            points = sweep_block.get("points", 501)
            if isinstance(points, bool) or not isinstance(points, int) or points < 1:
                raise ConfigError(f"sweep.points must be a positive integer, got {points!r}")
            sweep = SweepConfig(variable, _number(sweep_block, "from", "sweep"),
                                _number(sweep_block, "to", "sweep"), points)
            if sweep.stop < sweep.start:
                raise ConfigError("sweep.to must not be below sweep.from")

        simulation = None
        sim_block = _block(data, "simulation", required=False)
        if sim_block is not None:
            paths, seed = sim_block.get("paths", 100_000), sim_block.get("seed", 0)
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (paths, seed)):
                raise ConfigError("simulation.paths and simulation.seed must be integers")
            try:
                simulation = SimulationSpec(paths, seed)
            except ValueError as exc:
                raise ConfigError(f"simulation: {exc}") from exc

        profile = None
        if "profile" in data:
            raw = data["profile"]
            if not isinstance(raw, list) or len(raw) != len(agents):
                raise ConfigError("'profile' must be an array with one entry per agent")
            profile = tuple(_number({"v": v}, "v", "profile") for v in raw)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(spec, impact, sweep, simulation, profile)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)
