"""Constant Nash equilibria for relative investors whose average position moves the stock drift."""

from .core import (
    AgentParams,
    GameSpec,
    MarketParams,
    ValidationReport,
    alpha_max,
    hat_theta,
    validate_cara,
    validate_crra,
)
from .errors import (
    BracketError,
    ConfigError,
    ConsistencyError,
    DomainError,
    ImpactNashError,
    NoConvergence,
    NoEquilibrium,
    SingularDenominator,
    Unbounded,
)
from .linear_cara import (
    CriticalAlphaResult,
    EquilibriumResult,
    Mode,
    SignClass,
    aux_best_response,
    cara_best_response,
    cara_nash,
    critical_alpha,
    equilibrium_summary,
    s_hat,
)
from .linear_crra import crra_best_response, crra_critical_alphas, crra_nash
from .nonlinear import (
    FixedPointReport,
    Growth,
    ImpactFunction,
    best_response_nonlinear,
    classify_growth,
    impact_eval,
    nash_fixed_point,
)
from .verification import (
    CertificateReport,
    SimulationSpec,
    UtilityMode,
    cara_utility_constant,
    crra_utility_constant,
    nash_certificate,
    simulate_utility,
)

__version__ = "0.1.0"
