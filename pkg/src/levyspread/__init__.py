"""Spread option pricing under multivariate Levy models by Fourier series."""
from levyspread.complexmath import gamma, log_gamma, principal_power
from levyspread.density import (
    DensityApproximant,
    LatticeSpec,
    balanced_lattice,
    box_lattice,
    build_density,
    cross_cardinality_estimate,
    cross_lattice,
    eval_density,
    eval_density_grid,
)
from levyspread.errors import (
    AdaptednessError,
    BudgetError,
    ConfigurationError,
    DomainError,
    EmmViolationError,
    GammaOverflowError,
    InfeasibleModelError,
    NoSolutionError,
    PoleError,
    PricerError,
    UnsupportedOracleError,
    UnsupportedOrderError,
)
from levyspread.martingale import emm_drift_adjust, esscher_theta
from levyspread.models import (
    BasketModel,
    DecayOverride,
    ExponentKind,
    LevyExponentSpec,
    characteristic_function,
    decay_constant,
    exponent,
    gbm_basket,
    independent_basket,
    multivariate_exponent,
)
from levyspread.payoff import DampingVector, default_damping, hurd_zhou_g, payoff_coefficient
from levyspread.pricer import (
    EmmPolicy,
    PricingResult,
    SpreadContract,
    black_scholes_call,
    margrabe_exchange,
    monte_carlo_oracle,
    price_spread,
    quadrature_price_oracle,
)

__all__ = [
    "AdaptednessError",
    "BasketModel",
    "BudgetError",
    "ConfigurationError",
    "DampingVector",
    "DecayOverride",
    "DensityApproximant",
    "DomainError",
    "EmmPolicy",
    "EmmViolationError",
    "ExponentKind",
    "GammaOverflowError",
    "InfeasibleModelError",
    "LatticeSpec",
    "LevyExponentSpec",
    "NoSolutionError",
    "PoleError",
    "PricerError",
    "PricingResult",
    "SpreadContract",
    "UnsupportedOracleError",
    "UnsupportedOrderError",
    "balanced_lattice",
    "black_scholes_call",
    "box_lattice",
    "build_density",
    "characteristic_function",
    "cross_cardinality_estimate",
    "cross_lattice",
    "decay_constant",
    "default_damping",
    "emm_drift_adjust",
    "esscher_theta",
    "eval_density",
    "eval_density_grid",
    "exponent",
    "gamma",
    "gbm_basket",
    "hurd_zhou_g",
    "independent_basket",
    "log_gamma",
    "margrabe_exchange",
    "monte_carlo_oracle",
    "multivariate_exponent",
    "payoff_coefficient",
    "price_spread",
    "principal_power",
    "quadrature_price_oracle",
]
