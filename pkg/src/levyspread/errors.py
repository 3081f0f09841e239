"""Exception hierarchy shared by the library and the CLI."""
from __future__ import annotations

from typing import Sequence


class PricerError(Exception):
    """Base class. `exit_code` and `error_code` drive the CLI error path."""

    exit_code = 3
    error_code = "pricer_error"


class ConfigurationError(PricerError):
    exit_code = 2
    error_code = "config"


class DomainError(PricerError, ValueError):
    """An argument lies outside the domain of the requested operation."""

    error_code = "domain"


class PoleError(DomainError):
    error_code = "pole"


class GammaOverflowError(DomainError, OverflowError):
    """exp(log_gamma) overflowed; the log value is kept on the exception."""

    error_code = "gamma_overflow"

    def __init__(self, message: str, log_value: complex) -> None:
        super().__init__(message)
        self.log_value = log_value


class UnsupportedOrderError(DomainError):
    error_code = "unsupported_order"


class InfeasibleModelError(DomainError):
    error_code = "infeasible_model"

    def __init__(self, message: str, component: int) -> None:
        super().__init__(message)
        self.component = component


class AdaptednessError(DomainError):
    error_code = "adaptedness"


class EmmViolationError(DomainError):
    error_code = "emm_violation"


class NoSolutionError(DomainError):
    error_code = "no_solution"

    def __init__(
        self,
        message: str,
        scanned: Sequence[tuple[float, float]] = (),
    ) -> None:
        super().__init__(message)
        self.scanned = list(scanned)


class UnsupportedOracleError(PricerError):
    error_code = "unsupported_oracle"


class BudgetError(PricerError):
    exit_code = 4
    error_code = "budget"

    def __init__(self, message: str, estimate: float) -> None:
        super().__init__(message)
        self.estimate = estimate
