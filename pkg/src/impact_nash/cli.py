"""``impact-nash`` command-line front end.

Subcommands: ``equilibrium``, ``critical-alpha``, ``sweep-alpha``,
``sweep-gamma``, ``verify`` and ``simulate``. All read a JSON config
(see :mod:`impact_nash.config`).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .config import RunConfig, load_config
from .core import GameSpec, validate_cara, validate_crra
from .errors import (
    BracketError,
    ConfigError,
    DomainError,
    NoConvergence,
    NoEquilibrium,
    Unbounded,
)
from .linear_cara import EquilibriumResult, cara_nash, critical_alpha
from .linear_crra import crra_critical_alphas, crra_nash
from .nonlinear import Growth, ImpactFunction, ImpactKind, nash_fixed_point
from .verification import (
    UtilityMode,
    cara_utility_constant,
    crra_utility_constant,
    nash_certificate,
    simulate_utility,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NO_EQUILIBRIUM = 4
EXIT_NO_CONVERGENCE = 5
EXIT_UNBOUNDED = 6

STATUS_OK = "OK"
STATUS_NO_EQUILIBRIUM = "NO_EQUILIBRIUM"
STATUS_NO_CONVERGENCE = "NO_CONVERGENCE"
STATUS_UNBOUNDED = "UNBOUNDED"

#: Grid points this close to the critical impact are flagged in sweep output.
NEAR_CRITICAL = 1e-8


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    return f"{x:.12g}"


@dataclass(frozen=True)
class SweepRow:
    value: float
    strategies: tuple[float, ...] | None
    status: str
    s_hat: float | None = None
    drift: float | None = None


@dataclass(frozen=True)
class SweepTable:
    variable: str
    n: int
    rows: list[SweepRow]
    comments: list[str]
    with_diagnostics: bool

    def header(self) -> list[str]:
        cols = [self.variable] + [f"pi_{k + 1}" for k in range(self.n)]
        if self.with_diagnostics:
            cols += ["s_hat", "drift"]
        return cols + ["status"]

    def write(self, out: TextIO) -> None:
        for c in self.comments:
            out.write(f"# {c}\n")
        out.write(",".join(self.header()) + "\n")
        for row in self.rows:
            cells = [fmt(row.value)]
            if row.strategies is None:
                cells += [""] * self.n
            else:
                cells += [fmt(p) for p in row.strategies]
            if self.with_diagnostics:
                cells.append("" if row.s_hat is None else fmt(row.s_hat))
                cells.append("" if row.drift is None else fmt(row.drift))
            cells.append(row.status)
            out.write(",".join(cells) + "\n")


def linear_equilibrium(spec: GameSpec, utility: UtilityMode) -> EquilibriumResult:
    return cara_nash(spec) if utility is UtilityMode.CARA else crra_nash(spec)


def _critical_alphas(spec: GameSpec, utility: UtilityMode) -> list[float]:
    if utility is UtilityMode.CARA:
        try:
            return [critical_alpha(spec).alpha0]
        except BracketError:
            return []
    return [r.alpha0 for r in crra_critical_alphas(spec)]


def sweep_alpha(cfg: RunConfig, utility: UtilityMode) -> SweepTable:
    """Linear-impact equilibrium over the configured alpha grid."""
    spec, sweep = cfg.spec, cfg.sweep
    if sweep is None or sweep.variable != "alpha":
        raise ConfigError("sweep-alpha needs a sweep block with variable 'alpha'")
    if cfg.impact.kind is not ImpactKind.LINEAR:
        raise ConfigError("sweep-alpha needs linear impact")
    a_max = spec.alpha_max
    if sweep.stop >= a_max:
        raise ConfigError(f"sweep.to={sweep.stop!r} must be below alpha_max={a_max!r}")
    market, lead = spec.market, spec.agents[0]
    criticals = _critical_alphas(spec, utility)
    rows = []
    flagged = []
    for alpha in sweep.grid():
        alpha = float(alpha)
        rows.append(_alpha_row(spec.with_alpha(alpha), utility))
        if any(abs(alpha - a0) <= NEAR_CRITICAL for a0 in criticals):
            flagged.append(alpha)
    comments = [
        f"utility={utility.value}",
        f"merton_reference={fmt(lead.delta * market.mu / market.sigma**2)}",
        f"alpha_max={fmt(a_max)}",
        "alpha0=" + ";".join(fmt(a) for a in criticals),
    ]
    if flagged:
        comments.append("near_critical=" + ";".join(fmt(a) for a in flagged))
    return SweepTable("alpha", spec.n, rows, comments, with_diagnostics=True)


def _alpha_row(spec: GameSpec, utility: UtilityMode) -> SweepRow:
    try:
        eq = linear_equilibrium(spec, utility)
    except (NoEquilibrium, DomainError):
        return SweepRow(spec.alpha, None, STATUS_NO_EQUILIBRIUM)
    return SweepRow(spec.alpha, tuple(float(p) for p in eq.strategies), STATUS_OK,
                    eq.s_hat_value, eq.equilibrium_drift)


def gamma_row(spec: GameSpec, alpha: float, gamma: float) -> SweepRow:
    if gamma > 1.0:
        return SweepRow(gamma, None, STATUS_UNBOUNDED)
    try:
        report = nash_fixed_point(spec, ImpactFunction.power(alpha, gamma))
    except Unbounded:
        return SweepRow(gamma, None, STATUS_UNBOUNDED)
    except NoConvergence:
        return SweepRow(gamma, None, STATUS_NO_CONVERGENCE)
    except DomainError:
        return SweepRow(gamma, None, STATUS_NO_EQUILIBRIUM)
    return SweepRow(gamma, tuple(float(p) for p in report.strategies), STATUS_OK)


def sweep_gamma(cfg: RunConfig) -> SweepTable:
    """Power-impact equilibria over the configured exponent grid, plus the linear reference."""
    sweep = cfg.sweep
    if sweep is None or sweep.variable != "gamma":
        raise ConfigError("sweep-gamma needs a sweep block with variable 'gamma'")
    if cfg.impact.kind is not ImpactKind.SIGNED_POWER:
        raise ConfigError("sweep-gamma needs impact.type 'power'")
    if sweep.start <= 0:
        raise ConfigError("gamma grid must be positive")
    spec = cfg.spec.with_alpha(cfg.impact.alpha)
    grid = [float(g) for g in sweep.grid()]
    if grid[-1] != 1.0 and 1.0 not in grid:
        grid.append(1.0)
    rows = [gamma_row(spec, cfg.impact.alpha, g) for g in grid]
    comments = ["utility=cara"]
    try:
        linear = cara_nash(spec).strategies
        comments.append("linear_equilibrium=" + ";".join(fmt(p) for p in linear))
    except (NoEquilibrium, DomainError):
        comments.append("linear_equilibrium=none")
    return SweepTable("gamma", spec.n, rows, comments, with_diagnostics=False)


def _equilibrium_profile(cfg: RunConfig, utility: UtilityMode) -> np.ndarray:
    if cfg.impact.growth is Growth.LINEAR:
        return linear_equilibrium(cfg.spec.with_alpha(cfg.impact.alpha), utility).strategies
    if utility is UtilityMode.CRRA:
        raise ConfigError("CRRA utility supports linear impact only")
    return nash_fixed_point(cfg.spec, cfg.impact).strategies


def _print_conditions(eq_report, out: TextIO) -> None:
    for c in eq_report.conditions:
        out.write(f"condition {c.name}: {'PASS' if c.passed else 'FAIL'} ({fmt(c.value)})\n")


def cmd_equilibrium(cfg: RunConfig, utility: UtilityMode, out: TextIO) -> int:
    spec = cfg.spec
    out.write(f"utility: {utility.value}\n")
    if cfg.impact.growth is not Growth.LINEAR:
        if utility is UtilityMode.CRRA:
            raise ConfigError("CRRA utility supports linear impact only")
        report = nash_fixed_point(spec, cfg.impact)
        out.write(f"status: {STATUS_OK}\n")
        for k, p in enumerate(report.strategies):
            out.write(f"pi_{k + 1}: {fmt(p)}\n")
        out.write(f"iterations: {report.iterations}\nresidual: {fmt(report.residual)}\n")
        return EXIT_OK
    spec = spec.with_alpha(cfg.impact.alpha)
    validation = validate_cara(spec) if utility is UtilityMode.CARA else validate_crra(spec)
    try:
        eq = linear_equilibrium(spec, utility)
    except NoEquilibrium as exc:
        out.write(f"status: {STATUS_NO_EQUILIBRIUM}\nreason: {exc}\n")
        _print_conditions(validation, out)
        return EXIT_NO_EQUILIBRIUM
    except DomainError as exc:
        out.write(f"status: VALIDATION_FAILED\nreason: {exc}\n")
        _print_conditions(validation, out)
        return EXIT_VALIDATION
    out.write(f"status: {STATUS_OK}\n")
    for k, p in enumerate(eq.strategies):
        out.write(f"pi_{k + 1}: {fmt(p)}\n")
    out.write(f"mean_position: {fmt(eq.mean_position)}\n")
    out.write(f"drift: {fmt(eq.equilibrium_drift)}\n")
    if eq.s_hat_value is not None:
        out.write(f"s_hat: {fmt(eq.s_hat_value)}\n")
    out.write(f"singular_distance: {fmt(eq.singular_distance)}\n")
    _print_conditions(validation, out)
    return EXIT_OK


def cmd_critical_alpha(cfg: RunConfig, utility: UtilityMode, out: TextIO) -> int:
    spec = cfg.spec
    out.write(f"alpha_max: {fmt(spec.alpha_max)}\n")
    if utility is UtilityMode.CARA:
        res = critical_alpha(spec)
        out.write(f"alpha0: {fmt(res.alpha0)}\n")
        out.write(f"residual: {fmt(res.residual)}\n")
        out.write(f"bracket: {fmt(res.bracket[0])} {fmt(res.bracket[1])}\n")
        out.write(f"iterations: {res.iterations}\n")
        return EXIT_OK
    roots = crra_critical_alphas(spec)
    out.write(f"roots: {len(roots)}\n")
    for k, res in enumerate(roots):
        out.write(f"alpha0_{k + 1}: {fmt(res.alpha0)} residual {fmt(res.residual)}\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, utility: UtilityMode, out: TextIO) -> int:
    if cfg.profile is not None:
        profile = np.array(cfg.profile)
    else:
        profile = _equilibrium_profile(cfg, utility)
    spec = cfg.spec.with_alpha(cfg.impact.alpha)
    report = nash_certificate(spec, cfg.impact, profile, utility)
    out.write(f"grid: {report.grid}\n")
    for a in report.agents:
        out.write(
            f"agent {a.agent + 1}: {'PASS' if a.passed else 'FAIL'} pi={fmt(a.equilibrium_value)} "
            f"best_deviation={fmt(a.best_deviation)} gain={fmt(a.gain)}\n"
        )
    out.write(f"certificate: {'PASS' if report.passed else 'FAIL'}\n")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_simulate(cfg: RunConfig, utility: UtilityMode, out: TextIO) -> int:
    if cfg.simulation is None:
        raise ConfigError("simulate needs a 'simulation' block")
    if cfg.profile is not None:
        profile = np.array(cfg.profile)
    else:
        profile = _equilibrium_profile(cfg, utility)
    spec = cfg.spec.with_alpha(cfg.impact.alpha)
    sim = cfg.simulation
    out.write(f"paths: {sim.paths}\nseed: {sim.seed}\n")
    for i in range(spec.n):
        if utility is UtilityMode.CARA:
            exact = cara_utility_constant(spec, cfg.impact, profile, i)
        else:
            exact = crra_utility_constant(spec, profile, i, cfg.impact)
        est, se = simulate_utility(spec, cfg.impact, profile, i, utility, sim)
        if se > 0:
            z = (est - exact) / se
        else:
            z = 0.0 if est == exact else math.inf
        out.write(
            f"agent {i + 1}: pi={fmt(profile[i])} closed_form={fmt(exact)} "
            f"estimate={fmt(est)} se={fmt(se)} z={fmt(z)}\n"
        )
    return EXIT_OK


def _write_table(table: SweepTable, path: str | None, out: TextIO) -> None:
    if path is None:
        table.write(out)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        table.write(fh)
    out.write(f"wrote {len(table.rows)} rows to {path}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impact-nash",
        description="Constant Nash equilibria for relative investors with price impact.",
    )
    parser.add_argument(
        "command",
        choices=["equilibrium", "critical-alpha", "sweep-alpha", "sweep-gamma", "verify", "simulate"],
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--utility", choices=["cara", "crra"], default="cara")
    parser.add_argument("--out", default=None, help="CSV output path for sweeps (default stdout)")
    return parser


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    utility = UtilityMode(args.utility)
    try:
        cfg = load_config(args.config)
        if args.command == "equilibrium":
            return cmd_equilibrium(cfg, utility, out)
        if args.command == "critical-alpha":
            return cmd_critical_alpha(cfg, utility, out)
        if args.command == "sweep-alpha":
            _write_table(sweep_alpha(cfg, utility), args.out, out)
            return EXIT_OK
        if args.command == "sweep-gamma":
            if utility is UtilityMode.CRRA:
                raise ConfigError("sweep-gamma is defined for CARA utility only")
            _write_table(sweep_gamma(cfg), args.out, out)
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(cfg, utility, out)
        return cmd_simulate(cfg, utility, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoEquilibrium as exc:
        print(f"no equilibrium: {exc}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except Unbounded as exc:
        print(f"unbounded: {exc}", file=sys.stderr)
        return EXIT_UNBOUNDED
    except (DomainError, BracketError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
